//! Sequential vs data-parallel execution of the engine's sweeps. Without
//! the `parallel` feature both variants run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use occam_core::bench::{hpl_scenario_with, Balancing, HplParams, Mix};
use occam_core::cluster::default_inventory;
use occam_core::farm::{negotiate, JobAd, SlotAd};
use occam_core::fixtures;
use occam_core::fuzz::run_many;
use occam_core::par::{self, ExecMode};
use occam_core::ResourceVector;

const MODES: [(&str, ExecMode); 2] = [
    ("sequential", ExecMode::Sequential),
    ("parallel", ExecMode::Parallel),
];

fn hpl_sweep(c: &mut Criterion) {
    let inv = default_inventory();
    let mut params = HplParams::from_json(fixtures::HPL).unwrap();
    params.node_counts = (1..=32).collect();
    params.mix = Mix::LightPlusFat;
    params.balancing = Balancing::Proportional;
    let mut group = c.benchmark_group("hpl_sweep");
    for (name, mode) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| hpl_scenario_with(mode, black_box(&params), &inv).unwrap())
        });
    }
    group.finish();
}

fn fuzz(c: &mut Criterion) {
    let mut group = c.benchmark_group("fuzz_sequences");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::new(name, 200), &200, |b, &n| {
            b.iter(|| run_many(mode, n, 20).unwrap())
        });
    }
    group.finish();
}

/// One negotiation cycle per instance over a deterministic batch of queues.
fn matchmaking(c: &mut Criterion) {
    let rv = |x: u64| ResourceVector::new(x % 5 * 1000, x % 7 * 1024, x % 2);
    let instances: Vec<(Vec<JobAd>, Vec<SlotAd>)> = (0..2_000u64)
        .map(|i| {
            let jobs = (0..64)
                .map(|j| JobAd::idle(format!("j{j:06}"), rv(i * 31 + j), 0, 1.0))
                .collect();
            let slots = (0..32)
                .map(|k| SlotAd {
                    slot_id: format!("slot@c{k:06}"),
                    executor_id: format!("c{k:06}"),
                    free: rv(i * 17 + k + 3),
                    node_speed_per_core: 11.45,
                })
                .collect();
            (jobs, slots)
        })
        .collect();
    let mut group = c.benchmark_group("matchmaking");
    for (name, mode) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                par::map(mode, &instances, |(jobs, slots)| {
                    negotiate(jobs, slots).len()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, hpl_sweep, fuzz, matchmaking);
criterion_main!(benches);
