//! The operational shell: tenant registry, application submission, the
//! serialized command stream, and event-sourced persistence with replay.
//!
//! Every state change is an event appended through [`System::emit`], which
//! applies it to the state in the same step. Replaying a log therefore runs
//! exactly the code that produced it.

mod command;
mod events;
mod state;
mod store;
pub mod tenant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::alloc::Placement;
use crate::cluster::{capacity, default_inventory, Inventory};
use crate::error::Result;
use crate::manifest::{self, ValidationReport};
use crate::resources::ResourceVector;
use crate::sim::{Event, EventLog, SimTime};

pub use command::{Command, CommandRecord, Outcome};
pub use events::SystemEvent;
pub use state::{AppRecord, AppState, SystemState};
pub use store::Store;
pub use tenant::Tenant;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("tenant {0} already exists")]
    DuplicateName(String),
    #[error("invalid tenant name {0:?}")]
    InvalidName(String),
    #[error("tenant ssh key must not be empty")]
    EmptyKey,
    #[error("unknown tenant {0}")]
    UnknownTenant(String),
    #[error("unknown application {0}")]
    UnknownApp(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("application failed validation: {}", summarize(.0))]
    ValidationFailed(ValidationReport),
    #[error("application {app_id} is a {actual} application, not {expected}")]
    WrongModel {
        app_id: String,
        expected: &'static str,
        actual: &'static str,
    },
    #[error("application {0} is already deployed")]
    AlreadyDeployed(String),
    #[error("application {0} has been released")]
    AppReleased(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("corrupt log: {0}")]
    CorruptLog(String),
}

fn summarize(report: &ValidationReport) -> String {
    report
        .issues
        .iter()
        .map(|i| i.message.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}

impl ControlError {
    pub(crate) fn is_validation(&self) -> bool {
        matches!(
            self,
            ControlError::DuplicateName(_)
                | ControlError::InvalidName(_)
                | ControlError::EmptyKey
                | ControlError::UnknownTenant(_)
                | ControlError::ValidationFailed(_)
                | ControlError::InvalidArgument(_)
        )
    }
}

/// Snapshot of one application, as served by `app status`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AppStatus {
    pub app_id: String,
    pub name: String,
    pub tenant: String,
    pub model: &'static str,
    pub state: AppState,
    pub placements: Vec<Placement>,
}

/// Per-node capacity and live usage, as served by `GET /v1/nodes`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeUsage {
    pub id: String,
    pub class: crate::cluster::NodeClass,
    pub capacity: ResourceVector,
    pub used: ResourceVector,
}

pub(crate) fn app_id_for(tenant: &str, name: &str, seq: u64) -> String {
    let digest = Sha256::digest(format!("{tenant}\n{name}\n{seq}").as_bytes());
    format!("app-{}", &hex::encode(digest)[..12])
}

/// The single writer. Commands run one at a time; each either commits all of
/// its events or none of them.
#[derive(Clone, Debug)]
pub struct System {
    state: SystemState,
    log: EventLog<SystemEvent>,
}

impl System {
    pub fn new(seed: u64) -> Self {
        Self::with_inventory(seed, default_inventory())
    }

    pub fn with_inventory(seed: u64, inventory: Inventory) -> Self {
        Self {
            state: SystemState::new(inventory),
            log: EventLog::new(seed),
        }
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn log(&self) -> &EventLog<SystemEvent> {
        &self.log
    }

    pub fn now(&self) -> SimTime {
        self.state.now
    }

    /// Appends an event at the current time and folds it into the state.
    pub(crate) fn emit(&mut self, body: SystemEvent) -> Result<()> {
        self.emit_at(self.state.now, body)
    }

    pub(crate) fn emit_at(&mut self, t: SimTime, body: SystemEvent) -> Result<()> {
        let seq = self.log.len() as u64;
        let event = Event { seq, t, body };
        self.state
            .apply(&event)
            .map_err(|e| ControlError::CorruptLog(format!("event {seq} rejected: {e}")))?;
        self.log.extend(vec![event]);
        Ok(())
    }

    /// Runs one command transactionally.
    pub fn execute(&mut self, command: Command) -> Result<Outcome> {
        let saved_state = self.state.clone();
        let saved_len = self.log.len();
        let record = CommandRecord {
            seq: self.state.next_command,
            issued_at: self.state.now,
            command: command.clone(),
        };
        let result = self
            .emit(SystemEvent::Command(record))
            .and_then(|()| self.dispatch(command));
        if let Err(e) = &result {
            if !e.commits() {
                self.state = saved_state;
                self.log.truncate(saved_len);
            }
        }
        result
    }

    fn dispatch(&mut self, command: Command) -> Result<Outcome> {
        match command {
            Command::RegisterTenant { name, ssh_pubkey } => {
                self.register_tenant(&name, &ssh_pubkey)
            }
            Command::SubmitApplication { app } => self.register_application(app),
            Command::ReleaseApplication { app_id } => self.release_application(&app_id),
            Command::DeployFarm { app_id } => self.deploy_farm(&app_id),
            Command::ScaleFarm { app_id, delta } => self.scale_farm(&app_id, delta),
            Command::SubmitJob {
                app_id,
                request,
                priority,
                work_hs06_s,
            } => self.submit_job(&app_id, request, priority, work_hs06_s),
            Command::Negotiate { app_id } => self.negotiate_farm(&app_id),
            Command::RunFarm { app_id } => self.run_jobs(&app_id),
            Command::RunPipeline { app_id } => self.run_pipeline(&app_id),
            Command::StartSession { app_id } => self.start_session(&app_id),
            Command::ExecImage {
                session_id,
                image,
                work_hs06_s,
                share,
            } => self.exec_image(&session_id, &image, work_hs06_s, share),
            Command::StopSession { session_id } => self.stop_session(&session_id),
            Command::Advance { seconds } => self.advance(seconds),
            Command::CalibrateMetadata {
                observed_runtime_s,
                op_count,
            } => self.calibrate_metadata(observed_runtime_s, op_count),
            Command::BenchHpl(params) => self.bench_hpl(params),
            Command::BenchFio(params) => self.bench_fio(params),
            Command::BenchMdtest(params) => self.bench_mdtest(params),
        }
    }

    fn register_tenant(&mut self, name: &str, ssh_pubkey: &str) -> Result<Outcome> {
        if !tenant::valid_name(name) {
            return Err(ControlError::InvalidName(name.to_string()).into());
        }
        if ssh_pubkey.trim().is_empty() {
            return Err(ControlError::EmptyKey.into());
        }
        if self.state.tenants.contains_key(name) {
            return Err(ControlError::DuplicateName(name.to_string()).into());
        }
        let uid = tenant::FIRST_UID + self.state.tenants.len() as u32;
        let t = Tenant::new(name, ssh_pubkey, uid);
        self.emit(SystemEvent::TenantRegistered(t.clone()))?;
        Ok(Outcome::Tenant(t))
    }

    fn register_application(&mut self, app: manifest::ComputingApplication) -> Result<Outcome> {
        if !self.state.tenants.contains_key(&app.tenant) {
            return Err(ControlError::UnknownTenant(app.tenant.clone()).into());
        }
        let report = manifest::validate(&app, &self.state.inventory);
        if !report.ok {
            return Err(ControlError::ValidationFailed(report).into());
        }
        let seq = self.state.next_command - 1;
        let app_id = app_id_for(&app.tenant, &app.name, seq);
        self.emit(SystemEvent::AppSubmitted {
            app_id: app_id.clone(),
            app,
        })?;
        Ok(Outcome::Submitted { app_id })
    }

    /// Parses a manifest and submits it. Schema and value errors are raised
    /// before anything is recorded.
    pub fn submit_manifest(&mut self, text: &str) -> Result<String> {
        let app = manifest::parse_manifest(text)?;
        match self.execute(Command::SubmitApplication { app })? {
            Outcome::Submitted { app_id } => Ok(app_id),
            other => unreachable!("submission produced {other:?}"),
        }
    }

    pub(crate) fn app_record(&self, app_id: &str) -> Result<&AppRecord> {
        self.state
            .apps
            .get(app_id)
            .ok_or_else(|| ControlError::UnknownApp(app_id.to_string()).into())
    }

    pub(crate) fn set_app_state(&mut self, app_id: &str, state: AppState) -> Result<()> {
        if self.app_record(app_id)?.state != state {
            self.emit(SystemEvent::AppState {
                app_id: app_id.to_string(),
                state,
            })?;
        }
        Ok(())
    }

    /// Opens a new partition for `app_id` and returns its id.
    pub(crate) fn open_partition(&mut self, app_id: &str) -> Result<String> {
        let partition_id = format!("p{:04}", self.state.next_partition);
        self.emit(SystemEvent::PartitionCreated {
            partition_id: partition_id.clone(),
            app_id: app_id.to_string(),
        })?;
        Ok(partition_id)
    }

    pub(crate) fn add_placements(
        &mut self,
        partition_id: &str,
        placements: &[Placement],
    ) -> Result<()> {
        for placement in placements {
            self.emit(SystemEvent::PlacementAdded {
                partition_id: partition_id.to_string(),
                placement: placement.clone(),
            })?;
        }
        Ok(())
    }

    pub(crate) fn offers(&self) -> Result<Vec<crate::alloc::Offer>> {
        let live = self.state.live_placements();
        Ok(crate::alloc::make_offers(
            &self.state.inventory,
            &live,
            self.state.next_command,
        )?)
    }

    fn release_application(&mut self, app_id: &str) -> Result<Outcome> {
        let record = self.app_record(app_id)?;
        if record.state == AppState::Released {
            return Err(ControlError::AppReleased(app_id.to_string()).into());
        }
        let sessions: Vec<String> = self
            .state
            .sessions
            .values()
            .filter(|s| s.app_id == app_id && s.state == crate::session::SessionState::Active)
            .map(|s| s.session_id.clone())
            .collect();
        for sid in sessions {
            self.stop_session(&sid)?;
        }
        if self
            .state
            .farms
            .get(app_id)
            .is_some_and(|f| f.state == crate::farm::FarmState::Running)
        {
            self.emit(SystemEvent::FarmReleased {
                app_id: app_id.to_string(),
            })?;
        }
        let open: Vec<(String, usize)> = self
            .state
            .partitions
            .values()
            .filter(|p| p.app_id == app_id && p.state != crate::alloc::PartitionState::Released)
            .map(|p| (p.partition_id.clone(), p.placements.len()))
            .collect();
        let mut freed = 0;
        for (partition_id, held) in open {
            self.emit(SystemEvent::PartitionReleased { partition_id })?;
            freed += held;
        }
        self.set_app_state(app_id, AppState::Released)?;
        Ok(Outcome::Released {
            app_id: app_id.to_string(),
            freed,
        })
    }

    fn advance(&mut self, seconds: f64) -> Result<Outcome> {
        if !(seconds.is_finite() && seconds >= 0.0) {
            return Err(
                ControlError::InvalidArgument(format!("cannot advance by {seconds} s")).into(),
            );
        }
        let to = self.state.now + SimTime::from_secs_f64(seconds);
        self.emit_at(to, SystemEvent::ClockAdvanced { to })?;
        Ok(Outcome::Clock { now: to })
    }

    pub fn app_status(&self, app_id: &str) -> Result<AppStatus> {
        let record = self.app_record(app_id)?;
        let placements = self
            .state
            .partitions
            .values()
            .filter(|p| p.app_id == app_id)
            .flat_map(|p| p.placements.iter().cloned())
            .collect();
        Ok(AppStatus {
            app_id: record.app_id.clone(),
            name: record.app.name.clone(),
            tenant: record.app.tenant.clone(),
            model: record.app.model.type_name(),
            state: record.state,
            placements,
        })
    }

    pub fn node_usage(&self) -> Vec<NodeUsage> {
        self.state
            .inventory
            .nodes
            .iter()
            .map(|n| NodeUsage {
                id: n.id.clone(),
                class: n.class,
                capacity: capacity(n),
                used: self.state.usage.get(&n.id).copied().unwrap_or_default(),
            })
            .collect()
    }

    /// SHA-256 over the canonical JSON form of the state.
    pub fn state_hash(&self) -> String {
        let json = serde_json::to_vec(&self.state).expect("state serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Rebuilds a system by folding every event of `log` into an empty state.
    pub fn replay(log: &EventLog<SystemEvent>) -> Result<System> {
        Self::replay_with(log, default_inventory())
    }

    pub fn replay_with(log: &EventLog<SystemEvent>, inventory: Inventory) -> Result<System> {
        let mut system = System::with_inventory(log.seed(), inventory);
        for event in log.events() {
            system
                .state
                .apply(event)
                .map_err(|e| ControlError::CorruptLog(format!("event {}: {e}", event.seq)))?;
        }
        system.log = log.clone();
        Ok(system)
    }

    /// Parses and replays a JSON Lines log, requiring the rebuilt log to
    /// serialize back to exactly the input bytes.
    pub fn replay_text(text: &str) -> Result<System> {
        let log = EventLog::parse(text)?;
        let system = Self::replay(&log)?;
        if system.log.to_jsonl() != text {
            return Err(ControlError::CorruptLog("log is not in canonical form".into()).into());
        }
        Ok(system)
    }
}
