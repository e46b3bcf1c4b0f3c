//! On-demand virtual batch farms: an access node, a central manager, a set
//! of executors, a priority job queue and a matchmaking cycle that carves
//! dynamic slots out of executor shares.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alloc::{place, Placement, PlacementRequest, Role, Target};
use crate::cluster::NodeClass;
use crate::control::{AppState, Command, ControlError, Outcome, System, SystemEvent};
use crate::error::Result;
use crate::manifest::ExecutionModel;
use crate::resources::ResourceVector;
use crate::sim::{SimTime, Simulation};

/// Share given to each of the access and manager containers.
pub const SERVICE_SHARE: ResourceVector = ResourceVector::new(1000, 2048, 0);

/// Suffix marking an executor image derived from the application image.
pub const FARM_IMAGE_SUFFIX: &str = "-farm";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FarmError {
    #[error("farm {0} is not running")]
    FarmNotRunning(String),
    #[error("invalid job: {0}")]
    InvalidJob(String),
    #[error("invalid scale delta: {0}")]
    InvalidDelta(String),
    #[error("job {job_id} does not fit any executor of the farm")]
    Starvation { job_id: String },
    #[error("cannot remove {requested} executors, only {idle} are idle")]
    NoIdleExecutors { requested: usize, idle: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Idle,
    Running,
    Done,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobAd {
    pub job_id: String,
    pub request: ResourceVector,
    /// Higher runs first.
    pub priority: i64,
    pub work_hs06_s: f64,
    pub state: JobState,
    pub slot_id: Option<String>,
    pub start: Option<SimTime>,
    pub end: Option<SimTime>,
}

impl JobAd {
    pub fn idle(
        job_id: impl Into<String>,
        request: ResourceVector,
        priority: i64,
        work_hs06_s: f64,
    ) -> Self {
        Self {
            job_id: job_id.into(),
            request,
            priority,
            work_hs06_s,
            state: JobState::Idle,
            slot_id: None,
            start: None,
            end: None,
        }
    }
}

/// The unclaimed part of one executor's share.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotAd {
    pub slot_id: String,
    pub executor_id: String,
    pub free: ResourceVector,
    /// HS06 per logical core of the executor's node.
    pub node_speed_per_core: f64,
}

impl SlotAd {
    pub fn id_for(container_id: &str) -> String {
        format!("slot@{container_id}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Match {
    pub job_id: String,
    pub slot_id: String,
    pub granted: ResourceVector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FarmState {
    Running,
    Released,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirtualFarm {
    pub app_id: String,
    pub partition_id: String,
    pub image: String,
    pub node_class: NodeClass,
    pub whole_node: bool,
    pub executor_share: Option<ResourceVector>,
    pub access: Placement,
    pub manager: Placement,
    pub executors: Vec<Placement>,
    /// Descending priority, FIFO within a priority.
    pub queue: Vec<JobAd>,
    /// One per executor, ordered by slot id.
    pub slots: Vec<SlotAd>,
    pub state: FarmState,
}

impl VirtualFarm {
    fn executor_request(&self) -> PlacementRequest {
        match self.executor_share {
            Some(share) if !self.whole_node => {
                PlacementRequest::fractional(Role::Executor, share, Target::Class(self.node_class))
            }
            _ => PlacementRequest::whole(Role::Executor, self.node_class),
        }
    }

    fn slot_busy(&self, slot_id: &str) -> bool {
        self.queue
            .iter()
            .any(|j| j.state == JobState::Running && j.slot_id.as_deref() == Some(slot_id))
    }

    pub fn view(&self) -> FarmView {
        let count = |s| self.queue.iter().filter(|j| j.state == s).count();
        FarmView {
            app_id: self.app_id.clone(),
            partition_id: self.partition_id.clone(),
            image: self.image.clone(),
            state: self.state,
            access: self.access.clone(),
            manager: self.manager.clone(),
            executors: self.executors.clone(),
            slots: self.slots.clone(),
            idle_jobs: count(JobState::Idle),
            running_jobs: count(JobState::Running),
            done_jobs: count(JobState::Done),
        }
    }
}

/// What `farm deploy` and `farm scale` report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FarmView {
    pub app_id: String,
    pub partition_id: String,
    pub image: String,
    pub state: FarmState,
    pub access: Placement,
    pub manager: Placement,
    pub executors: Vec<Placement>,
    pub slots: Vec<SlotAd>,
    pub idle_jobs: usize,
    pub running_jobs: usize,
    pub done_jobs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub job_id: String,
    pub slot_id: String,
    pub start: SimTime,
    pub end: SimTime,
}

/// Leftover after granting `request` from `free`; smaller is a tighter fit.
fn leftover_key(free: &ResourceVector, request: &ResourceVector) -> Option<(u64, u64, u64)> {
    let rest = free.checked_sub(request)?;
    Some((rest.millicores, rest.memory_mib, rest.gpus))
}

/// One negotiation cycle over a queue and the current slots.
///
/// Idle jobs are visited in queue order. Each takes the slot it fits most
/// tightly (least leftover millicores, then memory, then GPUs, then lowest
/// slot id), and that slot's free vector shrinks by the request.
pub fn negotiate(queue: &[JobAd], slots: &[SlotAd]) -> Vec<Match> {
    let mut free: Vec<ResourceVector> = slots.iter().map(|s| s.free).collect();
    let mut matches = Vec::new();
    for job in queue.iter().filter(|j| j.state == JobState::Idle) {
        let best = slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| Some((leftover_key(&free[i], &job.request)?, &s.slot_id, i)))
            .min();
        if let Some((_, slot_id, i)) = best {
            free[i] = free[i].checked_sub(&job.request).expect("fit checked");
            matches.push(Match {
                job_id: job.job_id.clone(),
                slot_id: slot_id.clone(),
                granted: job.request,
            });
        }
    }
    matches
}

/// Seconds a job of `work` HS06·s takes on `millicores` of a core rated
/// `speed_per_core`.
pub fn job_duration(work_hs06_s: f64, speed_per_core: f64, millicores: u64) -> f64 {
    if work_hs06_s == 0.0 {
        return 0.0;
    }
    work_hs06_s / (speed_per_core * millicores as f64 / 1000.0)
}

fn farm_model(
    system: &System,
    app_id: &str,
) -> Result<(NodeClass, bool, Option<ResourceVector>, u32)> {
    let record = system.app_record(app_id)?;
    match &record.app.model {
        ExecutionModel::BatchFarm {
            executors,
            whole_node,
            executor_share,
            node_class,
        } => Ok((*node_class, *whole_node, *executor_share, *executors)),
        other => Err(ControlError::WrongModel {
            app_id: app_id.to_string(),
            expected: "batch-farm",
            actual: other.type_name(),
        }
        .into()),
    }
}

impl System {
    fn running_farm(&self, app_id: &str) -> Result<&VirtualFarm> {
        farm_model(self, app_id)?;
        self.state()
            .farms
            .get(app_id)
            .filter(|f| f.state == FarmState::Running)
            .ok_or_else(|| FarmError::FarmNotRunning(app_id.to_string()).into())
    }

    pub(crate) fn deploy_farm(&mut self, app_id: &str) -> Result<Outcome> {
        let (class, whole_node, executor_share, count) = farm_model(self, app_id)?;
        let record = self.app_record(app_id)?;
        if record.state == AppState::Released {
            return Err(ControlError::AppReleased(app_id.to_string()).into());
        }
        if self.state().farms.contains_key(app_id) {
            return Err(ControlError::AlreadyDeployed(app_id.to_string()).into());
        }
        let image = format!("{}{FARM_IMAGE_SUFFIX}", record.app.image);
        let executor = match executor_share {
            Some(share) if !whole_node => {
                PlacementRequest::fractional(Role::Executor, share, Target::Class(class))
            }
            _ => PlacementRequest::whole(Role::Executor, class),
        };
        // Executors go first so whole-node farms can claim every node of
        // their class; the services then fall back to any node with room.
        let mut requests = vec![executor; count as usize];
        requests.push(PlacementRequest::fractional(
            Role::Access,
            SERVICE_SHARE,
            Target::PreferClass(class),
        ));
        requests.push(PlacementRequest::fractional(
            Role::Manager,
            SERVICE_SHARE,
            Target::PreferClass(class),
        ));

        let offers = self.offers()?;
        let first = self.state().next_container;
        let placements = place(app_id, &requests, &offers, &self.state().inventory, first)?;
        let partition_id = self.open_partition(app_id)?;
        self.add_placements(&partition_id, &placements)?;
        self.emit(SystemEvent::PartitionState {
            partition_id: partition_id.clone(),
            state: crate::alloc::PartitionState::Running,
        })?;
        let executors = &placements[..count as usize];
        self.emit(SystemEvent::FarmDeployed {
            app_id: app_id.to_string(),
            partition_id,
            image,
            node_class: class,
            whole_node,
            executor_share,
            access: services_container(&placements, Role::Access),
            manager: services_container(&placements, Role::Manager),
            executors: executors.iter().map(|p| p.container_id.clone()).collect(),
        })?;
        self.set_app_state(app_id, AppState::Running)?;
        Ok(Outcome::Farm(self.running_farm(app_id)?.view()))
    }

    pub(crate) fn scale_farm(&mut self, app_id: &str, delta: i64) -> Result<Outcome> {
        let farm = self.running_farm(app_id)?;
        let current = farm.executors.len() as i64;
        if delta == 0 {
            return Err(FarmError::InvalidDelta("delta must not be zero".into()).into());
        }
        if current + delta < 1 {
            return Err(FarmError::InvalidDelta(format!(
                "{current} executors {delta:+} would leave none"
            ))
            .into());
        }
        let partition_id = farm.partition_id.clone();
        if delta > 0 {
            let requests = vec![farm.executor_request(); delta as usize];
            let offers = self.offers()?;
            let first = self.state().next_container;
            let placements = place(app_id, &requests, &offers, &self.state().inventory, first)?;
            self.add_placements(&partition_id, &placements)?;
            for p in placements {
                self.emit(SystemEvent::ExecutorAdded {
                    app_id: app_id.to_string(),
                    container_id: p.container_id,
                })?;
            }
        } else {
            let mut idle: Vec<&Placement> = farm
                .executors
                .iter()
                .filter(|e| !farm.slot_busy(&SlotAd::id_for(&e.container_id)))
                .collect();
            let requested = delta.unsigned_abs() as usize;
            if requested > idle.len() {
                return Err(FarmError::NoIdleExecutors {
                    requested,
                    idle: idle.len(),
                }
                .into());
            }
            idle.sort_by(|a, b| (&b.node_id, &b.container_id).cmp(&(&a.node_id, &a.container_id)));
            let doomed: Vec<String> = idle[..requested]
                .iter()
                .map(|p| p.container_id.clone())
                .collect();
            for container_id in doomed {
                self.emit(SystemEvent::ExecutorRemoved {
                    app_id: app_id.to_string(),
                    container_id: container_id.clone(),
                })?;
                self.emit(SystemEvent::PlacementReleased {
                    partition_id: partition_id.clone(),
                    container_id,
                })?;
            }
        }
        Ok(Outcome::Farm(self.running_farm(app_id)?.view()))
    }

    pub(crate) fn submit_job(
        &mut self,
        app_id: &str,
        request: ResourceVector,
        priority: i64,
        work_hs06_s: f64,
    ) -> Result<Outcome> {
        self.running_farm(app_id)?;
        if !(work_hs06_s.is_finite() && work_hs06_s >= 0.0) {
            return Err(FarmError::InvalidJob(format!(
                "work must be a non-negative number, got {work_hs06_s}"
            ))
            .into());
        }
        if work_hs06_s > 0.0 && request.millicores == 0 {
            return Err(FarmError::InvalidJob("a job with work needs millicores".into()).into());
        }
        let job_id = format!("j{:06}", self.state().next_job);
        self.emit(SystemEvent::JobSubmitted {
            app_id: app_id.to_string(),
            job: JobAd::idle(job_id.clone(), request, priority, work_hs06_s),
        })?;
        Ok(Outcome::JobQueued { job_id })
    }

    /// Runs one negotiation cycle and starts every matched job now.
    fn start_matches(&mut self, app_id: &str) -> Result<Vec<(Match, SimTime)>> {
        let farm = self.running_farm(app_id)?;
        let matches = negotiate(&farm.queue, &farm.slots);
        let now = self.now();
        let mut started = Vec::with_capacity(matches.len());
        for m in matches {
            let farm = self.running_farm(app_id)?;
            let job = farm
                .queue
                .iter()
                .find(|j| j.job_id == m.job_id)
                .expect("matched job queued");
            let slot = farm
                .slots
                .iter()
                .find(|s| s.slot_id == m.slot_id)
                .expect("matched slot exists");
            let secs = job_duration(
                job.work_hs06_s,
                slot.node_speed_per_core,
                m.granted.millicores,
            );
            let end = now + SimTime::from_secs_f64(secs);
            self.emit(SystemEvent::JobStarted {
                app_id: app_id.to_string(),
                job_id: m.job_id.clone(),
                slot_id: m.slot_id.clone(),
                granted: m.granted,
                end,
            })?;
            started.push((m, end));
        }
        Ok(started)
    }

    pub(crate) fn negotiate_farm(&mut self, app_id: &str) -> Result<Outcome> {
        let started = self.start_matches(app_id)?;
        Ok(Outcome::Matches {
            matches: started.into_iter().map(|(m, _)| m).collect(),
        })
    }

    /// Negotiates and advances simulated time until the queue drains.
    pub(crate) fn run_jobs(&mut self, app_id: &str) -> Result<Outcome> {
        let farm = self.running_farm(app_id)?;
        for job in farm.queue.iter().filter(|j| j.state == JobState::Idle) {
            if !farm.executors.iter().any(|e| job.request.fits_in(&e.share)) {
                return Err(FarmError::Starvation {
                    job_id: job.job_id.clone(),
                }
                .into());
            }
        }
        let mut sim: Simulation<String> = Simulation::new(self.now());
        let mut running: Vec<&JobAd> = farm
            .queue
            .iter()
            .filter(|j| j.state == JobState::Running)
            .collect();
        running.sort_by(|a, b| (a.end, &a.job_id).cmp(&(b.end, &b.job_id)));
        for job in running {
            sim.schedule(
                job.end.expect("running jobs have an end"),
                job.job_id.clone(),
            );
        }

        let mut completions = Vec::new();
        loop {
            for (m, end) in self.start_matches(app_id)? {
                sim.schedule(end, m.job_id);
            }
            let fired = sim.step();
            if fired.is_empty() {
                break;
            }
            let mut done: Vec<String> = fired.into_iter().map(|e| e.payload).collect();
            done.sort();
            let t = sim.now();
            for job_id in done {
                let job = self
                    .running_farm(app_id)?
                    .queue
                    .iter()
                    .find(|j| j.job_id == job_id)
                    .expect("scheduled job queued")
                    .clone();
                self.emit_at(
                    t,
                    SystemEvent::JobCompleted {
                        app_id: app_id.to_string(),
                        job_id: job_id.clone(),
                    },
                )?;
                completions.push(Completion {
                    job_id,
                    slot_id: job.slot_id.expect("running jobs hold a slot"),
                    start: job.start.expect("running jobs have a start"),
                    end: t,
                });
            }
        }
        completions.sort_by(|a, b| (a.end, &a.job_id).cmp(&(b.end, &b.job_id)));
        Ok(Outcome::Completions { completions })
    }

    pub fn farm(&self, app_id: &str) -> Option<&VirtualFarm> {
        self.state().farms.get(app_id)
    }
}

fn services_container(placements: &[Placement], role: Role) -> String {
    placements
        .iter()
        .find(|p| p.role == role)
        .map(|p| p.container_id.clone())
        .expect("service container placed")
}

/// Convenience for tests and tools: `job submit` arguments as a command.
pub fn job_command(
    app_id: &str,
    request: ResourceVector,
    priority: i64,
    work_hs06_s: f64,
) -> Command {
    Command::SubmitJob {
        app_id: app_id.to_string(),
        request,
        priority,
        work_hs06_s,
    }
}
