//! Simulated benchmark scenarios: locked-step HPL weak scaling, fio
//! bandwidth against the storage appliances, and mdtest metadata load, each
//! producing a report that can be written as CSV.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::cluster::{Inventory, NodeClass, NodeSpec, StorageAppliance, StorageKind};
use crate::control::{ControlError, Outcome, System, SystemEvent};
use crate::error::Result;
use crate::par::{self, ExecMode};
use crate::sim::models::{
    io_rates, locked_step_time, metadata_time, proportional_blocks, weak_scaling_efficiency,
    Direction, IoDemand, WorkShare,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("invalid benchmark parameters: {0}")]
    Invalid(String),
    #[error("{requested} nodes requested but the mix has only {available}")]
    NotEnoughNodes { requested: u32, available: usize },
    #[error("the scratch appliance has no calibrated metadata rate")]
    Uncalibrated,
    #[error("cannot write report: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchKind {
    Hpl,
    Fio,
    Mdtest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchScenario {
    pub kind: BenchKind,
    pub params: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub metric: String,
    pub value: f64,
    pub unit: String,
}

impl ReportRow {
    fn new(label: impl Into<String>, metric: &str, value: f64, unit: &str) -> Self {
        Self {
            label: label.into(),
            metric: metric.into(),
            value,
            unit: unit.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub scenario: BenchScenario,
    pub rows: Vec<ReportRow>,
}

impl BenchReport {
    pub fn value(&self, label: &str, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.label == label && r.metric == metric)
            .map(|r| r.value)
    }
}

fn scenario<P: Serialize>(kind: BenchKind, params: &P) -> BenchScenario {
    BenchScenario {
        kind,
        params: serde_json::to_value(params).expect("parameters serialize"),
    }
}

pub const CSV_HEADER: [&str; 4] = ["label", "metric", "value", "unit"];

/// The report as CSV: a `label,metric,value,unit` header and one LF-terminated
/// line per row.
pub fn to_csv(report: &BenchReport) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(CSV_HEADER).expect("in-memory write");
    for row in &report.rows {
        writer
            .write_record([
                row.label.as_str(),
                row.metric.as_str(),
                &row.value.to_string(),
                row.unit.as_str(),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn emit_csv(report: &BenchReport, path: &Path) -> Result<(), BenchError> {
    std::fs::write(path, to_csv(report))
        .map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------- HPL

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mix {
    HomogeneousLight,
    /// Light and fat nodes alternating.
    LightPlusFat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Balancing {
    /// The same work per logical core on every node.
    Equal,
    /// Work in proportion to node speed.
    Proportional,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HplParams {
    pub node_counts: Vec<u32>,
    /// HS06·s per logical core per step.
    pub work_per_core: f64,
    pub steps: u32,
    pub mix: Mix,
    pub balancing: Balancing,
    /// Block size of the proportional split, in HS06·s.
    pub granularity: f64,
}

impl HplParams {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        serde_json::from_str(text).map_err(|e| BenchError::Invalid(e.to_string()))
    }

    fn check(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::Invalid(m.into()));
        if self.node_counts.is_empty() || self.node_counts.contains(&0) {
            return bad("node counts must be positive");
        }
        if self.steps == 0 {
            return bad("steps must be at least 1");
        }
        if !(self.work_per_core.is_finite() && self.work_per_core > 0.0) {
            return bad("work per core must be positive");
        }
        if !(self.granularity.is_finite() && self.granularity > 0.0) {
            return bad("granularity must be positive");
        }
        Ok(())
    }
}

/// Nodes in the order a run of `mix` takes them.
pub fn hpl_pool(inv: &Inventory, mix: Mix) -> Vec<&NodeSpec> {
    let light: Vec<&NodeSpec> = inv.nodes_of(NodeClass::Light).collect();
    match mix {
        Mix::HomogeneousLight => light,
        Mix::LightPlusFat => {
            let fat: Vec<&NodeSpec> = inv.nodes_of(NodeClass::Fat).collect();
            let mut pool = Vec::with_capacity(light.len() + fat.len());
            let mut light = light.into_iter();
            for f in fat {
                pool.extend(light.next());
                pool.push(f);
            }
            pool.extend(light);
            pool
        }
    }
}

/// Per-node work for one locked step on `nodes`.
pub fn hpl_shares(nodes: &[&NodeSpec], params: &HplParams) -> Vec<WorkShare> {
    let work: Vec<f64> = match params.balancing {
        Balancing::Equal => nodes
            .iter()
            .map(|n| params.work_per_core * f64::from(n.logical_cores))
            .collect(),
        Balancing::Proportional => {
            // Enough work to keep every node busy for as long as the first
            // node alone takes under the equal split.
            let reference =
                params.work_per_core * f64::from(nodes[0].logical_cores) / nodes[0].hs06;
            let speeds: Vec<f64> = nodes.iter().map(|n| n.hs06).collect();
            let total = speeds.iter().sum::<f64>() * reference;
            proportional_blocks(&speeds, total, params.granularity)
        }
    };
    nodes
        .iter()
        .zip(work)
        .map(|(n, work)| WorkShare {
            node_id: n.id.clone(),
            work,
            speed: n.hs06,
        })
        .collect()
}

pub fn hpl_scenario(params: &HplParams, inv: &Inventory) -> Result<BenchReport, BenchError> {
    hpl_scenario_with(ExecMode::default(), params, inv)
}

pub fn hpl_scenario_with(
    mode: ExecMode,
    params: &HplParams,
    inv: &Inventory,
) -> Result<BenchReport, BenchError> {
    params.check()?;
    let pool = hpl_pool(inv, params.mix);
    if let Some(&n) = params
        .node_counts
        .iter()
        .find(|&&n| n as usize > pool.len())
    {
        return Err(BenchError::NotEnoughNodes {
            requested: n,
            available: pool.len(),
        });
    }
    let time = |n: &u32| locked_step_time(&hpl_shares(&pool[..*n as usize], params), params.steps);
    let t1 = time(&1);
    let times = par::map(mode, &params.node_counts, time);
    let mut rows = Vec::with_capacity(2 * times.len());
    for (n, t) in params.node_counts.iter().zip(times) {
        let label = format!("N={n}");
        rows.push(ReportRow::new(label.clone(), "time", t, "s"));
        rows.push(ReportRow::new(
            label,
            "efficiency",
            weak_scaling_efficiency(t1, t),
            "1",
        ));
    }
    Ok(BenchReport {
        scenario: scenario(BenchKind::Hpl, params),
        rows,
    })
}

// ---------------------------------------------------------------- fio

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FioParams {
    pub target: StorageKind,
    pub clients: u32,
    pub numjobs: u32,
    pub block_kib: u32,
    pub rwmix_read_pct: u32,
    pub per_job_bytes: u64,
    /// Rate each job asks for; absent means as fast as possible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand_kibps_per_job: Option<u64>,
}

#[derive(Deserialize)]
struct FioSection {
    clients: u32,
    numjobs: u32,
    block_kib: u32,
    rwmixread: u32,
    per_job_bytes: u64,
}

impl FioParams {
    /// Reads the section for `target` from a fio job description.
    pub fn from_json(text: &str, target: StorageKind) -> Result<Self, BenchError> {
        let doc: Value =
            serde_json::from_str(text).map_err(|e| BenchError::Invalid(e.to_string()))?;
        let key = match target {
            StorageKind::Scratch => "scratch",
            StorageKind::Archive => "archive",
        };
        let section = doc
            .get(key)
            .cloned()
            .ok_or_else(|| BenchError::Invalid(format!("no `{key}` section")))?;
        let s: FioSection =
            serde_json::from_value(section).map_err(|e| BenchError::Invalid(e.to_string()))?;
        Ok(Self {
            target,
            clients: s.clients,
            numjobs: s.numjobs,
            block_kib: s.block_kib,
            rwmix_read_pct: s.rwmixread,
            per_job_bytes: s.per_job_bytes,
            demand_kibps_per_job: None,
        })
    }

    fn check(&self) -> Result<(), BenchError> {
        if self.clients == 0 || self.numjobs == 0 || self.block_kib == 0 {
            return Err(BenchError::Invalid(
                "clients, numjobs and block size must be positive".into(),
            ));
        }
        if self.rwmix_read_pct > 100 {
            return Err(BenchError::Invalid("read mix is a percentage".into()));
        }
        Ok(())
    }

    /// What one job asks for in `direction`.
    fn demand(&self, direction: Direction) -> u64 {
        let pct = match direction {
            Direction::Read => self.rwmix_read_pct,
            Direction::Write => 100 - self.rwmix_read_pct,
        };
        match (pct, self.demand_kibps_per_job) {
            (0, _) => 0,
            (_, None) => u64::MAX,
            (pct, Some(d)) => d * u64::from(pct) / 100,
        }
    }
}

fn job_id(client: u32, job: u32) -> String {
    format!("client{:02}/job{job}", client + 1)
}

pub fn fio_scenario(
    params: &FioParams,
    appliance: &StorageAppliance,
) -> Result<BenchReport, BenchError> {
    params.check()?;
    let mut demands = Vec::new();
    for client in 0..params.clients {
        for job in 0..params.numjobs {
            for direction in [Direction::Read, Direction::Write] {
                demands.push(IoDemand {
                    client_id: job_id(client, job),
                    direction,
                    demand_kibps: params.demand(direction),
                });
            }
        }
    }
    let grants = io_rates(appliance, &demands);
    let total = |d: Direction| {
        grants
            .iter()
            .filter(|g| g.direction == d)
            .map(|g| g.rate_kibps)
            .sum::<u64>()
    };
    let (read, write) = (total(Direction::Read), total(Direction::Write));

    let label = match params.target {
        StorageKind::Scratch => "scratch",
        StorageKind::Archive => "archive",
    };
    let mut rows = vec![
        ReportRow::new(label, "aggregate_read", read as f64, "KiB/s"),
        ReportRow::new(label, "aggregate_write", write as f64, "KiB/s"),
        ReportRow::new(
            label,
            "read_iops",
            read as f64 / f64::from(params.block_kib),
            "IO/s",
        ),
        ReportRow::new(
            label,
            "write_iops",
            write as f64 / f64::from(params.block_kib),
            "IO/s",
        ),
    ];
    let kib = params.per_job_bytes as f64 / 1024.0;
    let read_kib = kib * f64::from(params.rwmix_read_pct) / 100.0;
    let write_kib = kib - read_kib;
    let seconds = |amount: f64, rate: u64| match (amount, rate) {
        (a, _) if a == 0.0 => 0.0,
        (_, 0) => f64::INFINITY,
        (a, r) => a / r as f64,
    };
    for client in 0..params.clients {
        let done = grants
            .chunks(2)
            .skip((client * params.numjobs) as usize)
            .take(params.numjobs as usize)
            .map(|pair| {
                seconds(read_kib, pair[0].rate_kibps).max(seconds(write_kib, pair[1].rate_kibps))
            })
            .fold(0.0, f64::max);
        rows.push(ReportRow::new(
            format!("client{:02}", client + 1),
            "completion_time",
            done,
            "s",
        ));
    }
    Ok(BenchReport {
        scenario: scenario(BenchKind::Fio, params),
        rows,
    })
}

// ---------------------------------------------------------------- mdtest

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdtestParams {
    pub hosts: u32,
    #[serde(rename = "np")]
    pub ranks: u32,
    pub ppn: u32,
    /// Tree depth (`-z`).
    #[serde(rename = "z")]
    pub depth: u32,
    /// Tree fan-out (`-b`).
    #[serde(rename = "b")]
    pub branching: u64,
    /// Items per directory (`-I`).
    #[serde(rename = "I")]
    pub items_per_dir: u64,
    /// Repetitions (`-i`).
    #[serde(rename = "i")]
    pub iterations: u64,
    /// Bytes written per file (`-w`).
    #[serde(rename = "w")]
    pub write_bytes: u64,
    /// Unique working directory per rank (`-u`).
    #[serde(rename = "u")]
    pub unique_dir: bool,
    pub directory: String,
    /// Create, stat and remove for files and directories: up to 6.
    pub phases: u64,
}

impl MdtestParams {
    /// Parameters and the observed runtime from an mdtest description.
    pub fn from_json(text: &str) -> Result<(Self, f64), BenchError> {
        let invalid = |e: serde_json::Error| BenchError::Invalid(e.to_string());
        let mut doc: serde_json::Map<String, Value> =
            serde_json::from_str(text).map_err(invalid)?;
        let observed = doc
            .remove("observed_runtime_s")
            .and_then(|v| v.as_f64())
            .ok_or_else(|| BenchError::Invalid("missing `observed_runtime_s`".into()))?;
        let params = serde_json::from_value(Value::Object(doc)).map_err(invalid)?;
        Ok((params, observed))
    }

    fn check(&self) -> Result<(), BenchError> {
        if self.hosts == 0 || self.ppn == 0 || self.ranks != self.hosts * self.ppn {
            return Err(BenchError::Invalid(format!(
                "{} ranks do not fill {} hosts at {} per node",
                self.ranks, self.hosts, self.ppn
            )));
        }
        if self.branching == 0
            || self.items_per_dir == 0
            || self.iterations == 0
            || self.phases == 0
        {
            return Err(BenchError::Invalid(
                "tree, item, iteration and phase counts must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn op_count(&self) -> u64 {
        mdtest_op_count(
            self.branching,
            self.depth,
            self.items_per_dir,
            u64::from(self.ranks),
            self.iterations,
            self.phases,
        )
    }
}

/// Metadata operations of one mdtest run: every rank walks a tree of
/// `Σ branching^d` directories (d = 0..=depth) holding `items_per_dir` items
/// each, once per iteration and phase.
pub fn mdtest_op_count(
    branching: u64,
    depth: u32,
    items_per_dir: u64,
    ranks: u64,
    iterations: u64,
    phases: u64,
) -> u64 {
    let dirs: u64 = (0..=depth).map(|d| branching.pow(d)).sum();
    dirs * items_per_dir * ranks * iterations * phases
}

/// The metadata rate that makes `op_count` operations take `observed_runtime_s`.
pub fn calibrate_metadata_rate(observed_runtime_s: f64, op_count: u64) -> Result<f64, BenchError> {
    if !(observed_runtime_s.is_finite() && observed_runtime_s > 0.0) || op_count == 0 {
        return Err(BenchError::Invalid(
            "calibration needs a positive runtime and op count".into(),
        ));
    }
    Ok(op_count as f64 / observed_runtime_s)
}

pub fn mdtest_scenario(
    params: &MdtestParams,
    scratch: &StorageAppliance,
) -> Result<BenchReport, BenchError> {
    params.check()?;
    let rate = scratch
        .metadata_rate_ops_per_s
        .ok_or(BenchError::Uncalibrated)?;
    let ops = params.op_count();
    let label = format!("np={}", params.ranks);
    Ok(BenchReport {
        scenario: scenario(BenchKind::Mdtest, params),
        rows: vec![
            ReportRow::new(label.clone(), "operations", ops as f64, "ops"),
            ReportRow::new(label.clone(), "rate", rate, "ops/s"),
            ReportRow::new(label, "runtime", metadata_time(ops, rate), "s"),
        ],
    })
}

// ---------------------------------------------------------------- commands

impl System {
    fn record_report(&mut self, report: BenchReport) -> Result<Outcome> {
        self.emit(SystemEvent::BenchCompleted {
            report: report.clone(),
        })?;
        Ok(Outcome::Report(report))
    }

    pub(crate) fn bench_hpl(&mut self, params: HplParams) -> Result<Outcome> {
        let report = hpl_scenario(&params, &self.state().inventory)?;
        self.record_report(report)
    }

    pub(crate) fn bench_fio(&mut self, params: FioParams) -> Result<Outcome> {
        let report = fio_scenario(&params, self.state().inventory.storage(params.target))?;
        self.record_report(report)
    }

    pub(crate) fn bench_mdtest(&mut self, params: MdtestParams) -> Result<Outcome> {
        let report = mdtest_scenario(
            &params,
            self.state().inventory.storage(StorageKind::Scratch),
        )?;
        self.record_report(report)
    }

    pub(crate) fn calibrate_metadata(
        &mut self,
        observed_runtime_s: f64,
        op_count: u64,
    ) -> Result<Outcome> {
        let rate = calibrate_metadata_rate(observed_runtime_s, op_count)
            .map_err(|e| ControlError::InvalidArgument(e.to_string()))?;
        self.emit(SystemEvent::StorageCalibrated {
            appliance: StorageKind::Scratch,
            metadata_rate_ops_per_s: rate,
        })?;
        Ok(Outcome::Calibrated {
            metadata_rate_ops_per_s: rate,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::default_inventory;
    use crate::fixtures;

    fn hpl(mix: Mix, balancing: Balancing, counts: &[u32]) -> BenchReport {
        let mut params = HplParams::from_json(fixtures::HPL).unwrap();
        params.mix = mix;
        params.balancing = balancing;
        params.node_counts = counts.to_vec();
        hpl_scenario(&params, &default_inventory()).unwrap()
    }

    #[test]
    fn homogeneous_light_is_ideal() {
        let r = hpl(
            Mix::HomogeneousLight,
            Balancing::Equal,
            &[1, 2, 4, 8, 16, 32],
        );
        for n in [1, 2, 4, 8, 16, 32] {
            assert!((r.value(&format!("N={n}"), "efficiency").unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mixed_pool_alternates() {
        let inv = default_inventory();
        let ids: Vec<&str> = hpl_pool(&inv, Mix::LightPlusFat)
            .iter()
            .map(|n| n.id.as_str())
            .collect();
        assert_eq!(
            &ids[..9],
            &["L01", "F01", "L02", "F02", "L03", "F03", "L04", "F04", "L05"]
        );
        assert_eq!(ids.len(), 36);
    }

    #[test]
    fn mixed_equal_degrades_and_proportional_recovers() {
        let equal = hpl(Mix::LightPlusFat, Balancing::Equal, &[1, 2, 8]);
        assert!((equal.value("N=2", "efficiency").unwrap() - 8.6 / 11.452).abs() < 1e-3);
        let prop = hpl(Mix::LightPlusFat, Balancing::Proportional, &[1, 2, 8, 36]);
        for n in [2, 8, 36] {
            assert!(prop.value(&format!("N={n}"), "efficiency").unwrap() >= 0.999);
        }
    }

    #[test]
    fn too_many_nodes() {
        let mut params = HplParams::from_json(fixtures::HPL).unwrap();
        params.node_counts = vec![33];
        assert_eq!(
            hpl_scenario(&params, &default_inventory()),
            Err(BenchError::NotEnoughNodes {
                requested: 33,
                available: 32
            })
        );
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let params = HplParams::from_json(fixtures::HPL).unwrap();
        let inv = default_inventory();
        assert_eq!(
            hpl_scenario_with(ExecMode::Sequential, &params, &inv),
            hpl_scenario_with(ExecMode::Parallel, &params, &inv)
        );
    }

    #[test]
    fn csv_shape() {
        let r = hpl(Mix::HomogeneousLight, Balancing::Equal, &[1, 2, 4]);
        let text = to_csv(&r);
        assert!(text.starts_with("label,metric,value,unit\n"));
        assert_eq!(text.lines().count(), 7);
        assert!(!text.contains('\r'));
        let empty = BenchReport {
            rows: vec![],
            ..r.clone()
        };
        assert_eq!(to_csv(&empty), "label,metric,value,unit\n");
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        emit_csv(&r, &a).unwrap();
        emit_csv(&r, &b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn fio_saturates_caps() {
        let inv = default_inventory();
        let p = FioParams::from_json(fixtures::FIO, StorageKind::Scratch).unwrap();
        let r = fio_scenario(&p, inv.storage(StorageKind::Scratch)).unwrap();
        assert_eq!(r.value("scratch", "aggregate_read"), Some(2026246.0));
        assert_eq!(r.value("scratch", "aggregate_write"), Some(2025983.0));
        let p = FioParams::from_json(fixtures::FIO, StorageKind::Archive).unwrap();
        let r = fio_scenario(&p, inv.storage(StorageKind::Archive)).unwrap();
        assert_eq!(r.value("archive", "aggregate_read"), Some(39314.0));
        assert_eq!(r.value("archive", "aggregate_write"), Some(39314.0));
    }

    #[test]
    fn fio_under_subscribed() {
        let inv = default_inventory();
        let mut p = FioParams::from_json(fixtures::FIO, StorageKind::Archive).unwrap();
        p.clients = 1;
        p.numjobs = 1;
        p.demand_kibps_per_job = Some(2000);
        let r = fio_scenario(&p, inv.storage(StorageKind::Archive)).unwrap();
        assert_eq!(r.value("archive", "aggregate_read"), Some(1000.0));
        assert_eq!(r.value("archive", "aggregate_write"), Some(1000.0));
    }

    #[test]
    fn mdtest_counts() {
        assert_eq!(mdtest_op_count(3, 5, 2000, 1, 1, 1), 728_000);
        assert_eq!(mdtest_op_count(7, 0, 123, 1, 1, 1), 123);
        assert_eq!(
            mdtest_op_count(3, 5, 2000, 32, 64, 6),
            728_000 * 32 * 64 * 6
        );
        let (p, observed) = MdtestParams::from_json(fixtures::MDTEST).unwrap();
        assert_eq!(observed, 10720.0);
        assert_eq!(p.op_count(), 728_000 * 32 * 64 * 6);
    }

    #[test]
    fn mdtest_round_trip_and_guard() {
        let mut inv = default_inventory();
        let (mut p, observed) = MdtestParams::from_json(fixtures::MDTEST).unwrap();
        assert_eq!(
            mdtest_scenario(&p, inv.storage(StorageKind::Scratch)),
            Err(BenchError::Uncalibrated)
        );
        assert_eq!(calibrate_metadata_rate(1.0, 1), Ok(1.0));
        inv.storage_mut(StorageKind::Scratch)
            .metadata_rate_ops_per_s =
            Some(calibrate_metadata_rate(observed, p.op_count()).unwrap());
        let r = mdtest_scenario(&p, inv.storage(StorageKind::Scratch)).unwrap();
        assert!((r.value("np=32", "runtime").unwrap() - 10720.0).abs() < 1e-6);
        p.iterations /= 2;
        let half = mdtest_scenario(&p, inv.storage(StorageKind::Scratch)).unwrap();
        assert!((half.value("np=32", "runtime").unwrap() - 5360.0).abs() < 1e-6);
    }
}
