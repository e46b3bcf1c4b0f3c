use serde::{Deserialize, Serialize};

use crate::alloc::{PartitionState, Placement};
use crate::bench::BenchReport;
use crate::cluster::{NodeClass, StorageKind};
use crate::farm::JobAd;
use crate::manifest::ComputingApplication;
use crate::pipeline::{RunState, StageRecord};
use crate::resources::ResourceVector;
use crate::session::RunRecord;
use crate::sim::SimTime;

use super::command::CommandRecord;
use super::tenant::Tenant;
use super::AppState;

/// Every state transition the system can make. State is a fold over these.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum SystemEvent {
    #[serde(rename = "command")]
    Command(CommandRecord),
    #[serde(rename = "tenant.registered")]
    TenantRegistered(Tenant),
    #[serde(rename = "app.submitted")]
    AppSubmitted {
        app_id: String,
        app: ComputingApplication,
    },
    #[serde(rename = "app.state")]
    AppState { app_id: String, state: AppState },
    #[serde(rename = "partition.created")]
    PartitionCreated {
        partition_id: String,
        app_id: String,
    },
    #[serde(rename = "partition.state")]
    PartitionState {
        partition_id: String,
        state: PartitionState,
    },
    /// Frees every remaining placement of the partition.
    #[serde(rename = "partition.released")]
    PartitionReleased { partition_id: String },
    #[serde(rename = "placement.added")]
    PlacementAdded {
        partition_id: String,
        placement: Placement,
    },
    #[serde(rename = "placement.released")]
    PlacementReleased {
        partition_id: String,
        container_id: String,
    },
    #[serde(rename = "farm.deployed")]
    FarmDeployed {
        app_id: String,
        partition_id: String,
        image: String,
        node_class: NodeClass,
        whole_node: bool,
        executor_share: Option<ResourceVector>,
        access: String,
        manager: String,
        executors: Vec<String>,
    },
    #[serde(rename = "farm.executor_added")]
    ExecutorAdded {
        app_id: String,
        container_id: String,
    },
    #[serde(rename = "farm.executor_removed")]
    ExecutorRemoved {
        app_id: String,
        container_id: String,
    },
    #[serde(rename = "farm.released")]
    FarmReleased { app_id: String },
    #[serde(rename = "job.submitted")]
    JobSubmitted { app_id: String, job: JobAd },
    #[serde(rename = "job.started")]
    JobStarted {
        app_id: String,
        job_id: String,
        slot_id: String,
        granted: ResourceVector,
        end: SimTime,
    },
    #[serde(rename = "job.completed")]
    JobCompleted { app_id: String, job_id: String },
    #[serde(rename = "pipeline.started")]
    PipelineStarted {
        app_id: String,
        partition_id: String,
    },
    #[serde(rename = "pipeline.stage_completed")]
    StageCompleted { app_id: String, record: StageRecord },
    #[serde(rename = "pipeline.finished")]
    PipelineFinished {
        app_id: String,
        state: RunState,
        failed_stage: Option<String>,
    },
    #[serde(rename = "session.started")]
    SessionStarted {
        session_id: String,
        app_id: String,
        tenant: String,
        partition_id: String,
        executor: String,
    },
    #[serde(rename = "session.run")]
    SessionRun {
        session_id: String,
        record: RunRecord,
    },
    #[serde(rename = "session.stopped")]
    SessionStopped { session_id: String },
    #[serde(rename = "clock.advanced")]
    ClockAdvanced { to: SimTime },
    #[serde(rename = "storage.calibrated")]
    StorageCalibrated {
        appliance: StorageKind,
        metadata_rate_ops_per_s: f64,
    },
    #[serde(rename = "bench.completed")]
    BenchCompleted { report: BenchReport },
}
