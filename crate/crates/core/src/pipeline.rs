//! Linear multi-stage workflows. Each stage acquires its own task
//! placements, reads the previous stage's output back from scratch storage,
//! computes, and releases its placements before the next stage starts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alloc::{place_up_to, PlacementRequest, Role, Target};
use crate::cluster::{StorageAppliance, StorageKind};
use crate::control::{AppState, ControlError, Outcome, System, SystemEvent};
use crate::error::Result;
use crate::manifest::{ExecutionModel, StageSpec};
use crate::resources::ResourceVector;
use crate::sim::models::{io_rates, Direction, IoDemand};
use crate::sim::SimTime;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("stage {stage} cannot place a single task of {share}")]
    InsufficientResources {
        stage: String,
        share: ResourceVector,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunState {
    Pending,
    Running,
    Done,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub start: SimTime,
    pub end: SimTime,
    pub parallelism_used: u32,
    pub output_mib: f64,
    /// Time spent reading the previous stage's output.
    pub transfer: SimTime,
    pub compute: SimTime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub app_id: String,
    pub stage_records: Vec<StageRecord>,
    pub state: RunState,
    pub failed_stage: Option<String>,
}

impl PipelineRun {
    pub fn new(app_id: &str) -> Self {
        Self {
            app_id: app_id.to_string(),
            stage_records: Vec::new(),
            state: RunState::Running,
            failed_stage: None,
        }
    }

    /// First stage start to last stage end.
    pub fn makespan(&self) -> SimTime {
        match (self.stage_records.first(), self.stage_records.last()) {
            (Some(first), Some(last)) => last.end - first.start,
            _ => SimTime::ZERO,
        }
    }
}

/// Compute seconds for `stage` on `parallelism` tasks at `per_core_speed`
/// HS06 per core.
pub fn stage_duration(stage: &StageSpec, parallelism: u32, per_core_speed: f64) -> f64 {
    assert!(parallelism >= 1, "a stage runs on at least one task");
    if stage.work_hs06_s == 0.0 {
        return 0.0;
    }
    let cores = f64::from(parallelism) * stage.per_task_share.millicores as f64 / 1000.0;
    stage.work_hs06_s / (per_core_speed * cores)
}

/// Seconds for `readers` tasks to read `mib` back from `scratch`, each
/// reading an equal part as fast as the appliance lets it.
pub fn readback_time(mib: f64, readers: usize, scratch: &StorageAppliance) -> f64 {
    if mib == 0.0 || readers == 0 {
        return 0.0;
    }
    let demands: Vec<IoDemand> = (0..readers)
        .map(|i| IoDemand {
            client_id: format!("task{i}"),
            direction: Direction::Read,
            demand_kibps: u64::MAX,
        })
        .collect();
    let aggregate: u64 = io_rates(scratch, &demands)
        .iter()
        .map(|g| g.rate_kibps)
        .sum();
    mib * 1024.0 / aggregate as f64
}

impl System {
    pub(crate) fn run_pipeline(&mut self, app_id: &str) -> Result<Outcome> {
        let record = self.app_record(app_id)?;
        let stages = match &record.app.model {
            ExecutionModel::Pipeline { stages } => stages.clone(),
            other => {
                return Err(ControlError::WrongModel {
                    app_id: app_id.to_string(),
                    expected: "pipeline",
                    actual: other.type_name(),
                }
                .into())
            }
        };
        if record.state == AppState::Released {
            return Err(ControlError::AppReleased(app_id.to_string()).into());
        }
        let partition_id = self.open_partition(app_id)?;
        self.emit(SystemEvent::PipelineStarted {
            app_id: app_id.to_string(),
            partition_id: partition_id.clone(),
        })?;
        self.set_app_state(app_id, AppState::Running)?;

        let mut previous_output = 0.0;
        for stage in &stages {
            let request =
                PlacementRequest::fractional(Role::StageTask, stage.per_task_share, Target::Any);
            let offers = self.offers()?;
            let tasks = place_up_to(
                app_id,
                &request,
                stage.max_parallelism as usize,
                &offers,
                &self.state().inventory,
                self.state().next_container,
            );
            if tasks.is_empty() {
                self.emit(SystemEvent::PipelineFinished {
                    app_id: app_id.to_string(),
                    state: RunState::Failed,
                    failed_stage: Some(stage.name.clone()),
                })?;
                self.emit(SystemEvent::PartitionReleased { partition_id })?;
                self.set_app_state(app_id, AppState::Failed)?;
                return Err(PipelineError::InsufficientResources {
                    stage: stage.name.clone(),
                    share: stage.per_task_share,
                }
                .into());
            }
            self.add_placements(&partition_id, &tasks)?;

            let inventory = &self.state().inventory;
            let speed = tasks
                .iter()
                .filter_map(|t| inventory.node(&t.node_id))
                .map(|n| n.speed_per_core())
                .fold(f64::INFINITY, f64::min);
            let parallelism = tasks.len() as u32;
            let transfer = SimTime::from_secs_f64(readback_time(
                previous_output,
                tasks.len(),
                inventory.storage(StorageKind::Scratch),
            ));
            let compute = SimTime::from_secs_f64(stage_duration(stage, parallelism, speed));
            let start = self.now();
            let end = start + transfer + compute;
            self.emit_at(
                end,
                SystemEvent::StageCompleted {
                    app_id: app_id.to_string(),
                    record: StageRecord {
                        name: stage.name.clone(),
                        start,
                        end,
                        parallelism_used: parallelism,
                        output_mib: stage.output_mib,
                        transfer,
                        compute,
                    },
                },
            )?;
            for task in tasks {
                self.emit(SystemEvent::PlacementReleased {
                    partition_id: partition_id.clone(),
                    container_id: task.container_id,
                })?;
            }
            previous_output = stage.output_mib;
        }

        self.emit(SystemEvent::PipelineFinished {
            app_id: app_id.to_string(),
            state: RunState::Done,
            failed_stage: None,
        })?;
        self.emit(SystemEvent::PartitionReleased { partition_id })?;
        self.set_app_state(app_id, AppState::Done)?;
        let run = self
            .state()
            .pipeline_runs
            .get(app_id)
            .and_then(|runs| runs.last())
            .expect("run recorded")
            .clone();
        Ok(Outcome::Pipeline(run))
    }

    pub fn pipeline_runs(&self, app_id: &str) -> &[PipelineRun] {
        self.state()
            .pipeline_runs
            .get(app_id)
            .map_or(&[], Vec::as_slice)
    }
}
