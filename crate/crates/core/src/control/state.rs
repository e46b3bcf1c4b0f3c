use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::alloc::{container_id, Partition, PartitionState, Placement};
use crate::bench::BenchReport;
use crate::cluster::{capacity, Inventory, StorageKind};
use crate::farm::{FarmState, JobState, SlotAd, VirtualFarm};
use crate::manifest::ComputingApplication;
use crate::pipeline::{PipelineRun, RunState};
use crate::resources::ResourceVector;
use crate::session::{RunExit, Session, SessionState};
use crate::sim::{Event, SimTime};

use super::events::SystemEvent;
use super::tenant::{Tenant, FIRST_UID};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AppState {
    Pending,
    Running,
    Done,
    Failed,
    Released,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppRecord {
    pub app_id: String,
    pub app: ComputingApplication,
    pub state: AppState,
}

/// Everything the system knows. Only [`SystemState::apply`] mutates it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub now: SimTime,
    pub next_command: u64,
    pub next_container: u64,
    pub next_partition: u64,
    pub next_session: u64,
    pub next_job: u64,
    pub inventory: Inventory,
    pub tenants: BTreeMap<String, Tenant>,
    pub apps: BTreeMap<String, AppRecord>,
    pub partitions: BTreeMap<String, Partition>,
    /// Sum of live shares per node.
    pub usage: BTreeMap<String, ResourceVector>,
    pub farms: BTreeMap<String, VirtualFarm>,
    pub pipeline_runs: BTreeMap<String, Vec<PipelineRun>>,
    pub sessions: BTreeMap<String, Session>,
    pub reports: Vec<BenchReport>,
}

type Applied = Result<(), String>;

fn missing(what: &str, id: &str) -> String {
    format!("unknown {what} {id}")
}

impl SystemState {
    pub fn new(inventory: Inventory) -> Self {
        Self {
            now: SimTime::ZERO,
            next_command: 0,
            next_container: 0,
            next_partition: 0,
            next_session: 0,
            next_job: 0,
            inventory,
            tenants: BTreeMap::new(),
            apps: BTreeMap::new(),
            partitions: BTreeMap::new(),
            usage: BTreeMap::new(),
            farms: BTreeMap::new(),
            pipeline_runs: BTreeMap::new(),
            sessions: BTreeMap::new(),
            reports: Vec::new(),
        }
    }

    pub fn live_placements(&self) -> Vec<Placement> {
        self.partitions
            .values()
            .flat_map(|p| p.placements.iter().cloned())
            .collect()
    }

    pub fn placement(&self, partition_id: &str, container_id: &str) -> Option<&Placement> {
        self.partitions
            .get(partition_id)?
            .placements
            .iter()
            .find(|p| p.container_id == container_id)
    }

    pub fn app(&self, app_id: &str) -> Option<&AppRecord> {
        self.apps.get(app_id)
    }

    fn partition_mut(&mut self, id: &str) -> Result<&mut Partition, String> {
        self.partitions
            .get_mut(id)
            .ok_or_else(|| missing("partition", id))
    }

    fn farm_mut(&mut self, app_id: &str) -> Result<&mut VirtualFarm, String> {
        self.farms
            .get_mut(app_id)
            .ok_or_else(|| missing("farm", app_id))
    }

    fn session_mut(&mut self, id: &str) -> Result<&mut Session, String> {
        self.sessions
            .get_mut(id)
            .ok_or_else(|| missing("session", id))
    }

    fn free_share(&mut self, node_id: &str, share: ResourceVector) -> Applied {
        let used = self
            .usage
            .get_mut(node_id)
            .ok_or_else(|| missing("node usage", node_id))?;
        *used = used
            .checked_sub(&share)
            .ok_or_else(|| format!("node {node_id} usage would go negative"))?;
        if used.is_zero() {
            self.usage.remove(node_id);
        }
        Ok(())
    }

    fn add_placement(&mut self, partition_id: &str, placement: &Placement) -> Applied {
        if placement.container_id != container_id(self.next_container) {
            return Err(format!(
                "container {} out of sequence (expected {})",
                placement.container_id,
                container_id(self.next_container)
            ));
        }
        let node = self
            .inventory
            .node(&placement.node_id)
            .ok_or_else(|| missing("node", &placement.node_id))?;
        let cap = capacity(node);
        let used = self
            .usage
            .get(&placement.node_id)
            .copied()
            .unwrap_or_default()
            + placement.share;
        if !used.fits_in(&cap) {
            return Err(format!("node {} over-allocated", placement.node_id));
        }
        let part = self.partition_mut(partition_id)?;
        if part.state == PartitionState::Released || part.app_id != placement.app_id {
            return Err(format!(
                "cannot place {} in partition {partition_id}",
                placement.container_id
            ));
        }
        part.placements.push(placement.clone());
        self.usage.insert(placement.node_id.clone(), used);
        self.next_container += 1;
        Ok(())
    }

    fn release_placement(&mut self, partition_id: &str, container_id: &str) -> Applied {
        let part = self.partition_mut(partition_id)?;
        let idx = part
            .placements
            .iter()
            .position(|p| p.container_id == container_id)
            .ok_or_else(|| missing("container", container_id))?;
        let p = part.placements.remove(idx);
        self.free_share(&p.node_id, p.share)
    }

    /// Folds one event into the state. An error means the event does not fit
    /// the state it is applied to.
    pub fn apply(&mut self, event: &Event<SystemEvent>) -> Applied {
        if event.t < self.now {
            return Err(format!("event {} moves the clock backwards", event.seq));
        }
        self.now = event.t;
        match &event.body {
            SystemEvent::Command(record) => {
                if record.seq != self.next_command {
                    return Err(format!("command {} out of sequence", record.seq));
                }
                self.next_command += 1;
            }
            SystemEvent::TenantRegistered(t) => {
                let uid = FIRST_UID + self.tenants.len() as u32;
                if self.tenants.contains_key(&t.name) || t.uid != uid {
                    return Err(format!("tenant {} conflicts with the registry", t.name));
                }
                self.tenants.insert(t.name.clone(), t.clone());
            }
            SystemEvent::AppSubmitted { app_id, app } => {
                if self.apps.contains_key(app_id) || !self.tenants.contains_key(&app.tenant) {
                    return Err(format!("cannot register application {app_id}"));
                }
                self.apps.insert(
                    app_id.clone(),
                    AppRecord {
                        app_id: app_id.clone(),
                        app: app.clone(),
                        state: AppState::Pending,
                    },
                );
            }
            SystemEvent::AppState { app_id, state } => {
                self.apps
                    .get_mut(app_id)
                    .ok_or_else(|| missing("application", app_id))?
                    .state = *state;
            }
            SystemEvent::PartitionCreated {
                partition_id,
                app_id,
            } => {
                let expected = format!("p{:04}", self.next_partition);
                if *partition_id != expected || !self.apps.contains_key(app_id) {
                    return Err(format!("partition {partition_id} out of sequence"));
                }
                self.next_partition += 1;
                self.partitions.insert(
                    partition_id.clone(),
                    Partition {
                        partition_id: partition_id.clone(),
                        app_id: app_id.clone(),
                        placements: Vec::new(),
                        state: PartitionState::Deploying,
                    },
                );
            }
            SystemEvent::PartitionState {
                partition_id,
                state,
            } => {
                let part = self.partition_mut(partition_id)?;
                if part.state == PartitionState::Released {
                    return Err(format!("partition {partition_id} already released"));
                }
                part.state = *state;
            }
            SystemEvent::PartitionReleased { partition_id } => {
                let part = self.partition_mut(partition_id)?;
                if part.state == PartitionState::Released {
                    return Err(format!("partition {partition_id} already released"));
                }
                part.state = PartitionState::Released;
                let held: Vec<Placement> = part.placements.drain(..).collect();
                for p in held {
                    self.free_share(&p.node_id, p.share)?;
                }
            }
            SystemEvent::PlacementAdded {
                partition_id,
                placement,
            } => self.add_placement(partition_id, placement)?,
            SystemEvent::PlacementReleased {
                partition_id,
                container_id,
            } => self.release_placement(partition_id, container_id)?,
            SystemEvent::FarmDeployed {
                app_id,
                partition_id,
                image,
                node_class,
                whole_node,
                executor_share,
                access,
                manager,
                executors,
            } => {
                if self.farms.contains_key(app_id) {
                    return Err(format!("farm {app_id} already deployed"));
                }
                let find = |id: &str| {
                    self.placement(partition_id, id)
                        .cloned()
                        .ok_or_else(|| missing("container", id))
                };
                let access = find(access)?;
                let manager = find(manager)?;
                let executors = executors
                    .iter()
                    .map(|id| find(id))
                    .collect::<Result<Vec<_>, _>>()?;
                let slots = executors
                    .iter()
                    .map(|e| self.slot_for(e))
                    .collect::<Result<_, _>>()?;
                self.farms.insert(
                    app_id.clone(),
                    VirtualFarm {
                        app_id: app_id.clone(),
                        partition_id: partition_id.clone(),
                        image: image.clone(),
                        node_class: *node_class,
                        whole_node: *whole_node,
                        executor_share: *executor_share,
                        access,
                        manager,
                        executors,
                        queue: Vec::new(),
                        slots,
                        state: FarmState::Running,
                    },
                );
            }
            SystemEvent::ExecutorAdded {
                app_id,
                container_id,
            } => {
                let partition_id = self.farm_mut(app_id)?.partition_id.clone();
                let placement = self
                    .placement(&partition_id, container_id)
                    .cloned()
                    .ok_or_else(|| missing("container", container_id))?;
                let slot = self.slot_for(&placement)?;
                let farm = self.farm_mut(app_id)?;
                farm.executors.push(placement);
                let at = farm.slots.partition_point(|s| s.slot_id < slot.slot_id);
                farm.slots.insert(at, slot);
            }
            SystemEvent::ExecutorRemoved {
                app_id,
                container_id,
            } => {
                let farm = self.farm_mut(app_id)?;
                let slot_id = SlotAd::id_for(container_id);
                if farm.queue.iter().any(|j| {
                    j.state == JobState::Running && j.slot_id.as_deref() == Some(slot_id.as_str())
                }) {
                    return Err(format!("executor {container_id} is busy"));
                }
                farm.executors.retain(|e| e.container_id != *container_id);
                farm.slots.retain(|s| s.slot_id != slot_id);
            }
            SystemEvent::FarmReleased { app_id } => {
                let now = self.now;
                let farm = self.farm_mut(app_id)?;
                farm.state = FarmState::Released;
                for job in farm
                    .queue
                    .iter_mut()
                    .filter(|j| j.state == JobState::Running)
                {
                    job.state = JobState::Done;
                    job.end = Some(now);
                }
                farm.slots.clear();
                farm.executors.clear();
            }
            SystemEvent::JobSubmitted { app_id, job } => {
                let expected = format!("j{:06}", self.next_job);
                if job.job_id != expected || job.state != JobState::Idle {
                    return Err(format!("job {} out of sequence", job.job_id));
                }
                self.next_job += 1;
                let farm = self.farm_mut(app_id)?;
                let at = farm.queue.partition_point(|j| j.priority >= job.priority);
                farm.queue.insert(at, job.clone());
            }
            SystemEvent::JobStarted {
                app_id,
                job_id,
                slot_id,
                granted,
                end,
            } => {
                let now = self.now;
                let farm = self.farm_mut(app_id)?;
                let slot = farm
                    .slots
                    .iter_mut()
                    .find(|s| s.slot_id == *slot_id)
                    .ok_or_else(|| missing("slot", slot_id))?;
                slot.free = slot
                    .free
                    .checked_sub(granted)
                    .ok_or_else(|| format!("slot {slot_id} cannot grant {granted}"))?;
                let job = farm
                    .queue
                    .iter_mut()
                    .find(|j| j.job_id == *job_id)
                    .ok_or_else(|| missing("job", job_id))?;
                if job.state != JobState::Idle || job.request != *granted || *end < now {
                    return Err(format!("job {job_id} cannot start"));
                }
                job.state = JobState::Running;
                job.slot_id = Some(slot_id.clone());
                job.start = Some(now);
                job.end = Some(*end);
            }
            SystemEvent::JobCompleted { app_id, job_id } => {
                let now = self.now;
                let farm = self.farm_mut(app_id)?;
                let job = farm
                    .queue
                    .iter_mut()
                    .find(|j| j.job_id == *job_id)
                    .ok_or_else(|| missing("job", job_id))?;
                if job.state != JobState::Running || job.end != Some(now) {
                    return Err(format!("job {job_id} cannot complete at {now}"));
                }
                job.state = JobState::Done;
                let (slot_id, granted) = (job.slot_id.clone(), job.request);
                let slot = farm
                    .slots
                    .iter_mut()
                    .find(|s| Some(&s.slot_id) == slot_id.as_ref())
                    .ok_or_else(|| format!("job {job_id} ran on a vanished slot"))?;
                slot.free += granted;
            }
            SystemEvent::PipelineStarted {
                app_id,
                partition_id,
            } => {
                if !self.partitions.contains_key(partition_id) {
                    return Err(missing("partition", partition_id));
                }
                self.pipeline_runs
                    .entry(app_id.clone())
                    .or_default()
                    .push(PipelineRun::new(app_id));
            }
            SystemEvent::StageCompleted { app_id, record } => {
                let run = self
                    .pipeline_runs
                    .get_mut(app_id)
                    .and_then(|runs| runs.last_mut())
                    .filter(|r| r.state == RunState::Running)
                    .ok_or_else(|| missing("running pipeline", app_id))?;
                if run
                    .stage_records
                    .last()
                    .is_some_and(|prev| record.start < prev.end)
                {
                    return Err(format!("stage {} overlaps its predecessor", record.name));
                }
                run.stage_records.push(record.clone());
            }
            SystemEvent::PipelineFinished {
                app_id,
                state,
                failed_stage,
            } => {
                let run = self
                    .pipeline_runs
                    .get_mut(app_id)
                    .and_then(|runs| runs.last_mut())
                    .filter(|r| r.state == RunState::Running)
                    .ok_or_else(|| missing("running pipeline", app_id))?;
                run.state = *state;
                run.failed_stage = failed_stage.clone();
            }
            SystemEvent::SessionStarted {
                session_id,
                app_id,
                tenant,
                partition_id,
                executor,
            } => {
                let expected = format!("s{:04}", self.next_session);
                if *session_id != expected {
                    return Err(format!("session {session_id} out of sequence"));
                }
                let placement = self
                    .placement(partition_id, executor)
                    .cloned()
                    .ok_or_else(|| missing("container", executor))?;
                let speed = self
                    .inventory
                    .node(&placement.node_id)
                    .map(|n| n.speed_per_core())
                    .ok_or_else(|| missing("node", &placement.node_id))?;
                self.next_session += 1;
                self.sessions.insert(
                    session_id.clone(),
                    Session {
                        session_id: session_id.clone(),
                        app_id: app_id.clone(),
                        tenant: tenant.clone(),
                        partition_id: partition_id.clone(),
                        executor: placement,
                        speed_per_core: speed,
                        children: Vec::new(),
                        state: SessionState::Active,
                    },
                );
            }
            SystemEvent::SessionRun { session_id, record } => {
                let now = self.now;
                let session = self.session_mut(session_id)?;
                if session.state != SessionState::Active || record.start != now {
                    return Err(format!("session {session_id} cannot run {}", record.run_id));
                }
                if record.exit == RunExit::Ok && !session.admits(&record.share, now) {
                    return Err(format!("run {} exceeds its sandbox", record.run_id));
                }
                session.children.push(record.clone());
            }
            SystemEvent::SessionStopped { session_id } => {
                let now = self.now;
                let session = self.session_mut(session_id)?;
                if session.state != SessionState::Active {
                    return Err(format!("session {session_id} already stopped"));
                }
                for child in session.children.iter_mut().filter(|c| c.end > now) {
                    child.end = now;
                }
                session.state = SessionState::Stopped;
            }
            SystemEvent::ClockAdvanced { to } => {
                if *to != event.t {
                    return Err("clock event time mismatch".into());
                }
            }
            SystemEvent::StorageCalibrated {
                appliance,
                metadata_rate_ops_per_s,
            } => {
                if *appliance != StorageKind::Scratch || !(*metadata_rate_ops_per_s > 0.0) {
                    return Err("only the scratch appliance takes a positive metadata rate".into());
                }
                self.inventory
                    .storage_mut(StorageKind::Scratch)
                    .metadata_rate_ops_per_s = Some(*metadata_rate_ops_per_s);
            }
            SystemEvent::BenchCompleted { report } => self.reports.push(report.clone()),
        }
        Ok(())
    }

    fn slot_for(&self, executor: &Placement) -> Result<SlotAd, String> {
        let node = self
            .inventory
            .node(&executor.node_id)
            .ok_or_else(|| missing("node", &executor.node_id))?;
        Ok(SlotAd {
            slot_id: SlotAd::id_for(&executor.container_id),
            executor_id: executor.container_id.clone(),
            free: executor.share,
            node_speed_per_core: node.speed_per_core(),
        })
    }
}
