//! Seeded random command sequences with invariant checks after every step.
//!
//! The invariants: no node is ever over-allocated in any dimension, every
//! live container belongs to exactly one partition, the usage ledger agrees
//! with the partitions, a command that fails for lack of resources leaves no
//! trace, and replaying the final log rebuilds the same state.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alloc::PartitionState;
use crate::cluster::{capacity, NodeClass};
use crate::control::{AppState, Command, System, SystemState};
use crate::error::Error;
use crate::manifest::{ComputingApplication, ExecutionModel, StageSpec};
use crate::par::{self, ExecMode};
use crate::resources::ResourceVector;

const TENANT: &str = "fuzz";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SequenceStats {
    pub commands: u32,
    pub succeeded: u32,
    pub insufficient: u32,
    pub other_errors: u32,
}

impl std::ops::AddAssign for SequenceStats {
    fn add_assign(&mut self, o: Self) {
        self.commands += o.commands;
        self.succeeded += o.succeeded;
        self.insufficient += o.insufficient;
        self.other_errors += o.other_errors;
    }
}

/// A failed invariant, with the seed that reproduces it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub seed: u64,
    pub step: u32,
    pub message: String,
}

fn share(rng: &mut impl Rng, class: NodeClass) -> ResourceVector {
    let millicores = rng.gen_range(1..=48) * 1000;
    let memory_mib = rng.gen_range(1..=64) * 2048;
    let gpus = if class == NodeClass::Gpu {
        rng.gen_range(0..=2)
    } else {
        0
    };
    ResourceVector::new(millicores, memory_mib, gpus)
}

fn random_app(rng: &mut impl Rng, n: u32) -> ComputingApplication {
    let class = *NodeClass::ALL.choose(rng).expect("classes");
    let model = match rng.gen_range(0..3) {
        0 => {
            let whole_node = rng.gen_bool(0.3);
            ExecutionModel::BatchFarm {
                executors: rng.gen_range(1..=12),
                whole_node,
                executor_share: (!whole_node).then(|| share(rng, class)),
                node_class: class,
            }
        }
        1 => ExecutionModel::Session {
            share: share(rng, class),
            node_class: class,
        },
        _ => ExecutionModel::Pipeline {
            stages: (0..rng.gen_range(1..=3))
                .map(|k| StageSpec {
                    name: format!("stage{k}"),
                    image: "img".into(),
                    max_parallelism: rng.gen_range(1..=16),
                    work_hs06_s: f64::from(rng.gen_range(0..10_000)),
                    output_mib: f64::from(rng.gen_range(0..4096)),
                    per_task_share: share(rng, NodeClass::Light),
                })
                .collect(),
        },
    };
    ComputingApplication {
        name: format!("app{n}"),
        tenant: TENANT.into(),
        image: "img".into(),
        model,
    }
}

fn random_command(rng: &mut impl Rng, system: &System, n: u32) -> Command {
    let apps: Vec<(&String, &ExecutionModel, AppState)> = system
        .state()
        .apps
        .values()
        .map(|a| (&a.app_id, &a.app.model, a.state))
        .collect();
    let pick =
        |rng: &mut dyn rand::RngCore| apps.choose(rng).map(|(id, m, s)| ((*id).clone(), *m, *s));
    let roll = rng.gen_range(0..10);
    match (roll, pick(rng)) {
        (0..=2, _) | (_, None) => Command::SubmitApplication {
            app: random_app(rng, n),
        },
        (3..=5, Some((app_id, model, _))) => match model {
            ExecutionModel::BatchFarm { .. } => Command::DeployFarm { app_id },
            ExecutionModel::Session { .. } => Command::StartSession { app_id },
            ExecutionModel::Pipeline { .. } => Command::RunPipeline { app_id },
        },
        (6..=7, Some((app_id, _, _))) => {
            let delta = *[-3i64, -2, -1, 1, 2, 3].choose(rng).expect("deltas");
            Command::ScaleFarm { app_id, delta }
        }
        (_, Some((app_id, _, _))) => Command::ReleaseApplication { app_id },
    }
}

/// Checks the allocation invariants against the partitions themselves.
pub fn check_state(state: &SystemState) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    let mut used: BTreeMap<&str, ResourceVector> = BTreeMap::new();
    for part in state.partitions.values() {
        if part.state == PartitionState::Released && !part.placements.is_empty() {
            return Err(format!(
                "released partition {} still holds containers",
                part.partition_id
            ));
        }
        for p in &part.placements {
            if !seen.insert(&p.container_id) {
                return Err(format!(
                    "container {} appears in more than one partition",
                    p.container_id
                ));
            }
            if p.app_id != part.app_id {
                return Err(format!(
                    "container {} belongs to another application",
                    p.container_id
                ));
            }
            *used.entry(&p.node_id).or_default() += p.share;
        }
    }
    for node in &state.inventory.nodes {
        let u = used.get(node.id.as_str()).copied().unwrap_or_default();
        if !u.fits_in(&capacity(node)) {
            return Err(format!(
                "node {} over-allocated: {u} > {}",
                node.id,
                capacity(node)
            ));
        }
        if state.usage.get(&node.id).copied().unwrap_or_default() != u {
            return Err(format!(
                "usage ledger disagrees with partitions on {}",
                node.id
            ));
        }
    }
    Ok(())
}

/// Runs `len` random commands from `seed`, checking invariants throughout.
pub fn run_sequence(seed: u64, len: u32) -> Result<SequenceStats, Violation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut system = System::new(seed);
    let fail = |step, message: String| Violation {
        seed,
        step,
        message,
    };
    system
        .execute(Command::RegisterTenant {
            name: TENANT.into(),
            ssh_pubkey: "ssh-ed25519 AAAA fuzz".into(),
        })
        .map_err(|e| fail(0, e.to_string()))?;

    let mut stats = SequenceStats::default();
    for step in 0..len {
        let command = random_command(&mut rng, &system, step);
        let before = system.state().clone();
        let log_len = system.log().len();
        stats.commands += 1;
        match system.execute(command) {
            Ok(_) => stats.succeeded += 1,
            Err(Error::Pipeline(_)) => {
                // A failed pipeline run is recorded, but must hold nothing.
                stats.insufficient += 1;
                if system.state().live_placements() != before.live_placements() {
                    return Err(fail(step, "failed pipeline kept placements".into()));
                }
            }
            Err(e) if e.exit_code() == 3 => {
                stats.insufficient += 1;
                if *system.state() != before || system.log().len() != log_len {
                    return Err(fail(
                        step,
                        format!("insufficient-resources failure changed state: {e}"),
                    ));
                }
            }
            Err(_) => {
                stats.other_errors += 1;
                if *system.state() != before || system.log().len() != log_len {
                    return Err(fail(step, "failed command changed state".into()));
                }
            }
        }
        check_state(system.state()).map_err(|m| fail(step, m))?;
    }

    let replayed =
        System::replay_text(&system.log().to_jsonl()).map_err(|e| fail(len, e.to_string()))?;
    if replayed.state() != system.state() {
        return Err(fail(len, "replay rebuilt a different state".into()));
    }
    Ok(stats)
}

/// Runs sequences for seeds `0..count` and returns the totals, or every
/// violation found.
pub fn run_many(mode: ExecMode, count: u64, len: u32) -> Result<SequenceStats, Vec<Violation>> {
    let results = par::map_range(mode, count, |seed| run_sequence(seed, len));
    let mut total = SequenceStats::default();
    let mut violations = Vec::new();
    for r in results {
        match r {
            Ok(s) => total += s,
            Err(v) => violations.push(v),
        }
    }
    if violations.is_empty() {
        Ok(total)
    } else {
        Err(violations)
    }
}
