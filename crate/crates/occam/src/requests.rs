//! Request bodies shared by the CLI and the HTTP API, and their translation
//! into commands.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use occam_core::bench::{Balancing, FioParams, HplParams, MdtestParams, Mix};
use occam_core::cluster::StorageKind;
use occam_core::control::ControlError;
use occam_core::fixtures;
use occam_core::manifest::ExecutionModel;
use occam_core::{Command, ResourceVector, Result, System};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MixArg {
    Light,
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BalanceArg {
    Equal,
    Proportional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TargetArg {
    Scratch,
    Archive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TenantRequest {
    pub name: String,
    pub ssh_pubkey: String,
}

impl TenantRequest {
    pub fn command(self) -> Command {
        Command::RegisterTenant {
            name: self.name,
            ssh_pubkey: self.ssh_pubkey.trim().to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleRequest {
    pub delta: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobRequest {
    pub millicores: u64,
    pub memory_mib: u64,
    #[serde(default)]
    pub gpus: u64,
    #[serde(default)]
    pub priority: i64,
    /// HS06·s.
    pub work: f64,
}

impl JobRequest {
    pub fn command(self, app_id: &str) -> Command {
        Command::SubmitJob {
            app_id: app_id.to_string(),
            request: ResourceVector::new(self.millicores, self.memory_mib, self.gpus),
            priority: self.priority,
            work_hs06_s: self.work,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecRequest {
    pub image: String,
    pub work: f64,
    pub millicores: u64,
    pub memory_mib: u64,
    #[serde(default)]
    pub gpus: u64,
}

impl ExecRequest {
    pub fn command(self, session_id: &str) -> Command {
        Command::ExecImage {
            session_id: session_id.to_string(),
            image: self.image,
            work_hs06_s: self.work,
            share: ResourceVector::new(self.millicores, self.memory_mib, self.gpus),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdvanceRequest {
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HplRequest {
    /// Defaults to the shipped scenario's counts.
    #[serde(default)]
    pub nodes: Option<Vec<u32>>,
    pub mix: MixArg,
    pub balance: BalanceArg,
}

impl HplRequest {
    pub fn command(self) -> Result<Command> {
        let mut params = HplParams::from_json(fixtures::HPL)?;
        if let Some(nodes) = self.nodes {
            params.node_counts = nodes;
        }
        params.mix = match self.mix {
            MixArg::Light => Mix::HomogeneousLight,
            MixArg::Mixed => Mix::LightPlusFat,
        };
        params.balancing = match self.balance {
            BalanceArg::Equal => Balancing::Equal,
            BalanceArg::Proportional => Balancing::Proportional,
        };
        Ok(Command::BenchHpl(params))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FioRequest {
    pub target: TargetArg,
    /// Defaults to the shipped job description.
    #[serde(default)]
    pub clients: Option<u32>,
}

impl FioRequest {
    pub fn command(self) -> Result<Command> {
        let kind = match self.target {
            TargetArg::Scratch => StorageKind::Scratch,
            TargetArg::Archive => StorageKind::Archive,
        };
        let mut params = FioParams::from_json(fixtures::FIO, kind)?;
        if let Some(clients) = self.clients {
            params.clients = clients;
        }
        Ok(Command::BenchFio(params))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MdtestRequest {
    /// Phases counted per item; defaults to the shipped value.
    #[serde(default)]
    pub phases: Option<u64>,
}

impl MdtestRequest {
    /// Calibrates scratch metadata against the observed runtime, then runs
    /// the scenario with the same parameters.
    pub fn commands(self) -> Result<Vec<Command>> {
        let (mut params, observed): (MdtestParams, f64) =
            MdtestParams::from_json(fixtures::MDTEST)?;
        if let Some(phases) = self.phases {
            params.phases = phases;
        }
        Ok(vec![
            Command::CalibrateMetadata {
                observed_runtime_s: observed,
                op_count: params.op_count(),
            },
            Command::BenchMdtest(params),
        ])
    }
}

/// The command that brings `app_id` up under its execution model.
pub fn deploy_command(system: &System, app_id: &str) -> Result<Command> {
    let record = system
        .state()
        .app(app_id)
        .ok_or_else(|| ControlError::UnknownApp(app_id.to_string()))?;
    let app_id = app_id.to_string();
    Ok(match record.app.model {
        ExecutionModel::BatchFarm { .. } => Command::DeployFarm { app_id },
        ExecutionModel::Pipeline { .. } => Command::RunPipeline { app_id },
        ExecutionModel::Session { .. } => Command::StartSession { app_id },
    })
}
