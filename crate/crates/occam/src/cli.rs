use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use occam_core::bench::{emit_csv, to_csv};
use occam_core::control::{Store, DEFAULT_SEED};
use occam_core::manifest::parse_manifest;
use occam_core::{Command, Outcome, Result, System};

use crate::requests::{
    BalanceArg, ExecRequest, FioRequest, HplRequest, JobRequest, MdtestRequest, MixArg, TargetArg,
    TenantRequest,
};

#[derive(Debug, Parser)]
#[command(
    name = "occam",
    version,
    about = "Provision and simulate applications on the cluster"
)]
pub struct Cli {
    /// Directory holding the event log.
    #[arg(
        long,
        global = true,
        env = "OCCAM_STATE_DIR",
        default_value = "./state"
    )]
    pub state_dir: PathBuf,
    /// Seed recorded in a new event log.
    #[arg(long, global = true, env = "OCCAM_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Verb,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Show the cluster inventory.
    Inventory {
        #[command(subcommand)]
        action: InventoryAction,
    },
    Tenant {
        #[command(subcommand)]
        action: TenantAction,
    },
    App {
        #[command(subcommand)]
        action: AppAction,
    },
    Farm {
        #[command(subcommand)]
        action: FarmAction,
    },
    Job {
        #[command(subcommand)]
        action: JobAction,
    },
    Pipeline {
        #[command(subcommand)]
        action: PipelineAction,
    },
    Session {
        #[command(subcommand)]
        action: SessionAction,
    },
    Bench {
        #[command(subcommand)]
        action: BenchAction,
    },
    /// Move the simulated clock.
    Sim {
        #[command(subcommand)]
        action: SimAction,
    },
    /// Rebuild state from an event log and verify it round-trips.
    Replay { log: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum InventoryAction {
    Show,
}

#[derive(Debug, Subcommand)]
pub enum TenantAction {
    Add {
        name: String,
        /// File holding the public key.
        #[arg(long)]
        ssh_key: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum AppAction {
    Submit {
        manifest: PathBuf,
    },
    Status {
        app_id: String,
    },
    /// Stop everything the application runs and free its resources.
    Release {
        app_id: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum FarmAction {
    Deploy {
        app_id: String,
    },
    Scale {
        app_id: String,
        #[arg(long, allow_hyphen_values = true)]
        delta: i64,
    },
    /// One matchmaking cycle.
    Negotiate {
        app_id: String,
    },
    /// Run queued jobs to completion.
    Run {
        app_id: String,
    },
}

#[derive(Debug, Args)]
pub struct ShareArgs {
    #[arg(long)]
    pub millicores: u64,
    #[arg(long)]
    pub memory_mib: u64,
    #[arg(long, default_value_t = 0)]
    pub gpus: u64,
}

#[derive(Debug, Subcommand)]
pub enum JobAction {
    Submit {
        app_id: String,
        #[command(flatten)]
        share: ShareArgs,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        priority: i64,
        /// HS06·s.
        #[arg(long)]
        work: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum PipelineAction {
    Run { app_id: String },
}

#[derive(Debug, Subcommand)]
pub enum SessionAction {
    Start {
        app_id: String,
    },
    Exec {
        session_id: String,
        #[arg(long)]
        image: String,
        /// HS06·s.
        #[arg(long)]
        work: f64,
        #[command(flatten)]
        share: ShareArgs,
    },
    Stop {
        session_id: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum BenchAction {
    Hpl {
        #[arg(long, value_delimiter = ',')]
        nodes: Option<Vec<u32>>,
        #[arg(long, value_enum, default_value = "light")]
        mix: MixArg,
        #[arg(long, value_enum, default_value = "equal")]
        balance: BalanceArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Fio {
        #[arg(long, value_enum)]
        target: TargetArg,
        #[arg(long)]
        clients: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Mdtest {
        #[arg(long)]
        phases: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SimAction {
    Advance {
        #[arg(long)]
        seconds: f64,
    },
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("outputs serialize") + "\n"
}

#[derive(Serialize)]
struct ReplaySummary {
    seed: u64,
    events: usize,
    state_hash: String,
}

fn report_output(outcome: Outcome, out: Option<PathBuf>) -> Result<String> {
    let Outcome::Report(report) = outcome else {
        return Ok(json(&outcome));
    };
    match out {
        Some(path) => {
            emit_csv(&report, &path)?;
            Ok(format!(
                "wrote {} rows to {}\n",
                report.rows.len(),
                path.display()
            ))
        }
        None => Ok(to_csv(&report)),
    }
}

fn exec(store: &mut Store, command: Command) -> Result<String> {
    store.execute(command).map(|o| json(&o))
}

/// Runs one CLI invocation and returns what it prints on success.
pub fn run(cli: Cli) -> Result<String> {
    if let Verb::Replay { log } = &cli.command {
        let system = System::replay_text(&std::fs::read_to_string(log)?)?;
        return Ok(json(&ReplaySummary {
            seed: system.log().seed(),
            events: system.log().len(),
            state_hash: system.state_hash(),
        }));
    }
    let mut store = Store::open(&cli.state_dir, cli.seed)?;
    match cli.command {
        Verb::Replay { .. } => unreachable!("handled above"),
        Verb::Inventory {
            action: InventoryAction::Show,
        } => Ok(store.system().state().inventory.to_json()),
        Verb::Tenant {
            action: TenantAction::Add { name, ssh_key },
        } => exec(
            &mut store,
            TenantRequest {
                name,
                ssh_pubkey: std::fs::read_to_string(ssh_key)?,
            }
            .command(),
        ),
        Verb::App { action } => match action {
            AppAction::Submit { manifest } => {
                let app = parse_manifest(&std::fs::read_to_string(manifest)?)?;
                exec(&mut store, Command::SubmitApplication { app })
            }
            AppAction::Status { app_id } => Ok(json(&store.system().app_status(&app_id)?)),
            AppAction::Release { app_id } => {
                exec(&mut store, Command::ReleaseApplication { app_id })
            }
        },
        Verb::Farm { action } => match action {
            FarmAction::Deploy { app_id } => exec(&mut store, Command::DeployFarm { app_id }),
            FarmAction::Scale { app_id, delta } => {
                exec(&mut store, Command::ScaleFarm { app_id, delta })
            }
            FarmAction::Negotiate { app_id } => exec(&mut store, Command::Negotiate { app_id }),
            FarmAction::Run { app_id } => exec(&mut store, Command::RunFarm { app_id }),
        },
        Verb::Job {
            action:
                JobAction::Submit {
                    app_id,
                    share,
                    priority,
                    work,
                },
        } => exec(
            &mut store,
            JobRequest {
                millicores: share.millicores,
                memory_mib: share.memory_mib,
                gpus: share.gpus,
                priority,
                work,
            }
            .command(&app_id),
        ),
        Verb::Pipeline {
            action: PipelineAction::Run { app_id },
        } => exec(&mut store, Command::RunPipeline { app_id }),
        Verb::Session { action } => match action {
            SessionAction::Start { app_id } => exec(&mut store, Command::StartSession { app_id }),
            SessionAction::Exec {
                session_id,
                image,
                work,
                share,
            } => exec(
                &mut store,
                ExecRequest {
                    image,
                    work,
                    millicores: share.millicores,
                    memory_mib: share.memory_mib,
                    gpus: share.gpus,
                }
                .command(&session_id),
            ),
            SessionAction::Stop { session_id } => {
                exec(&mut store, Command::StopSession { session_id })
            }
        },
        Verb::Bench { action } => match action {
            BenchAction::Hpl {
                nodes,
                mix,
                balance,
                out,
            } => {
                let outcome = store.execute(
                    HplRequest {
                        nodes,
                        mix,
                        balance,
                    }
                    .command()?,
                )?;
                report_output(outcome, out)
            }
            BenchAction::Fio {
                target,
                clients,
                out,
            } => {
                let outcome = store.execute(FioRequest { target, clients }.command()?)?;
                report_output(outcome, out)
            }
            BenchAction::Mdtest { phases, out } => {
                let mut last = None;
                for command in (MdtestRequest { phases }).commands()? {
                    last = Some(store.execute(command)?);
                }
                report_output(last.expect("mdtest issues commands"), out)
            }
        },
        Verb::Sim {
            action: SimAction::Advance { seconds },
        } => exec(&mut store, Command::Advance { seconds }),
    }
}
