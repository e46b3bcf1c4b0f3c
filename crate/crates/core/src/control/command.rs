use serde::{Deserialize, Serialize};

use crate::bench::{BenchReport, FioParams, HplParams, MdtestParams};
use crate::farm::{Completion, FarmView, Match};
use crate::manifest::ComputingApplication;
use crate::pipeline::PipelineRun;
use crate::resources::ResourceVector;
use crate::session::{RunRecord, Session};
use crate::sim::SimTime;

use super::tenant::Tenant;

/// A state-changing request. The CLI and the HTTP API both reduce to these.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verb", content = "args")]
pub enum Command {
    #[serde(rename = "tenant.add")]
    RegisterTenant { name: String, ssh_pubkey: String },
    #[serde(rename = "app.submit")]
    SubmitApplication { app: ComputingApplication },
    #[serde(rename = "app.release")]
    ReleaseApplication { app_id: String },
    #[serde(rename = "farm.deploy")]
    DeployFarm { app_id: String },
    #[serde(rename = "farm.scale")]
    ScaleFarm { app_id: String, delta: i64 },
    #[serde(rename = "job.submit")]
    SubmitJob {
        app_id: String,
        request: ResourceVector,
        priority: i64,
        work_hs06_s: f64,
    },
    #[serde(rename = "farm.negotiate")]
    Negotiate { app_id: String },
    #[serde(rename = "farm.run")]
    RunFarm { app_id: String },
    #[serde(rename = "pipeline.run")]
    RunPipeline { app_id: String },
    #[serde(rename = "session.start")]
    StartSession { app_id: String },
    #[serde(rename = "session.exec")]
    ExecImage {
        session_id: String,
        image: String,
        work_hs06_s: f64,
        share: ResourceVector,
    },
    #[serde(rename = "session.stop")]
    StopSession { session_id: String },
    #[serde(rename = "clock.advance")]
    Advance { seconds: f64 },
    #[serde(rename = "storage.calibrate")]
    CalibrateMetadata {
        observed_runtime_s: f64,
        op_count: u64,
    },
    #[serde(rename = "bench.hpl")]
    BenchHpl(HplParams),
    #[serde(rename = "bench.fio")]
    BenchFio(FioParams),
    #[serde(rename = "bench.mdtest")]
    BenchMdtest(MdtestParams),
}

impl Command {
    pub fn verb(&self) -> &'static str {
        match self {
            Command::RegisterTenant { .. } => "tenant.add",
            Command::SubmitApplication { .. } => "app.submit",
            Command::ReleaseApplication { .. } => "app.release",
            Command::DeployFarm { .. } => "farm.deploy",
            Command::ScaleFarm { .. } => "farm.scale",
            Command::SubmitJob { .. } => "job.submit",
            Command::Negotiate { .. } => "farm.negotiate",
            Command::RunFarm { .. } => "farm.run",
            Command::RunPipeline { .. } => "pipeline.run",
            Command::StartSession { .. } => "session.start",
            Command::ExecImage { .. } => "session.exec",
            Command::StopSession { .. } => "session.stop",
            Command::Advance { .. } => "clock.advance",
            Command::CalibrateMetadata { .. } => "storage.calibrate",
            Command::BenchHpl(_) => "bench.hpl",
            Command::BenchFio(_) => "bench.fio",
            Command::BenchMdtest(_) => "bench.mdtest",
        }
    }
}

/// A command as recorded in the event log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandRecord {
    pub seq: u64,
    pub issued_at: SimTime,
    #[serde(flatten)]
    pub command: Command,
}

/// What a successful command produced.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Tenant(Tenant),
    Submitted { app_id: String },
    Released { app_id: String, freed: usize },
    Farm(FarmView),
    JobQueued { job_id: String },
    Matches { matches: Vec<Match> },
    Completions { completions: Vec<Completion> },
    Pipeline(PipelineRun),
    Session(Session),
    Run(RunRecord),
    Clock { now: SimTime },
    Calibrated { metadata_rate_ops_per_s: f64 },
    Report(BenchReport),
}
