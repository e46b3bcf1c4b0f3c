//! Closed-form performance models. All functions are pure and reentrant.

use serde::{Deserialize, Serialize};

use crate::cluster::{NetworkLink, StorageAppliance, Topology};

/// Work assigned to one participant of a locked-step computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkShare {
    pub node_id: String,
    /// HS06 seconds per step.
    pub work: f64,
    /// Whole-node HS06 score.
    pub speed: f64,
}

/// Duration of `steps` iterations where every step waits for the slowest
/// participant.
pub fn locked_step_time(shares: &[WorkShare], steps: u32) -> f64 {
    assert!(steps >= 1, "at least one step");
    assert!(!shares.is_empty(), "at least one participant");
    let slowest = shares
        .iter()
        .map(|s| {
            debug_assert!(s.work >= 0.0 && s.speed > 0.0);
            s.work / s.speed
        })
        .fold(0.0, f64::max);
    f64::from(steps) * slowest
}

/// Splits `total_work` in proportion to `speeds`, in whole multiples of
/// `granularity`. The rounding remainder goes to the fastest node (lowest
/// index on ties), and the result sums to `total_work`.
pub fn proportional_blocks(speeds: &[f64], total_work: f64, granularity: f64) -> Vec<f64> {
    assert!(!speeds.is_empty(), "at least one node");
    assert!(granularity > 0.0, "granularity must be positive");
    assert!(speeds.iter().all(|s| *s > 0.0), "speeds must be positive");

    let quanta = (total_work / granularity).round() as i64;
    let speed_sum: f64 = speeds.iter().sum();
    let mut blocks: Vec<i64> = speeds
        .iter()
        .map(|s| (quanta as f64 * s / speed_sum).round() as i64)
        .collect();

    let fastest = speeds
        .iter()
        .enumerate()
        .fold(0, |best, (i, s)| if *s > speeds[best] { i } else { best });
    let assigned: i64 = blocks.iter().sum();
    blocks[fastest] += quanta - assigned;
    // Nearest rounding can overshoot; take any deficit from the largest blocks.
    while blocks[fastest] < 0 {
        let donor = (0..blocks.len())
            .filter(|&i| i != fastest)
            .max_by_key(|&i| (blocks[i], std::cmp::Reverse(i)))
            .expect("a negative remainder implies another positive block");
        blocks[donor] -= 1;
        blocks[fastest] += 1;
    }

    let mut work: Vec<f64> = blocks.iter().map(|&b| b as f64 * granularity).collect();
    let others: f64 = work
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != fastest)
        .map(|(_, w)| *w)
        .sum();
    work[fastest] = total_work - others;
    work
}

/// `t1 / tn`; 1.0 is ideal weak scaling.
pub fn weak_scaling_efficiency(t1: f64, tn: f64) -> f64 {
    assert!(t1 > 0.0 && tn > 0.0, "times must be positive");
    t1 / tn
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Read,
    Write,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoDemand {
    pub client_id: String,
    pub direction: Direction,
    pub demand_kibps: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoGrant {
    pub client_id: String,
    pub direction: Direction,
    pub rate_kibps: u64,
}

/// Integer max-min fair allocation of `cap` among `demands`.
///
/// Leftover units that cannot be split evenly go one each to the earliest
/// unsatisfied demands, so the grants sum to `min(cap, sum of demands)`.
pub fn max_min_fair(cap: u64, demands: &[u64]) -> Vec<u64> {
    let mut grants = vec![0u64; demands.len()];
    let mut active: Vec<usize> = (0..demands.len()).filter(|&i| demands[i] > 0).collect();
    let mut remaining = cap;
    while !active.is_empty() {
        let share = remaining / active.len() as u64;
        let (done, rest): (Vec<usize>, Vec<usize>) =
            active.iter().partition(|&&i| demands[i] <= share);
        if done.is_empty() {
            let leftover = remaining - share * rest.len() as u64;
            for (k, &i) in rest.iter().enumerate() {
                grants[i] = share + u64::from((k as u64) < leftover);
            }
            break;
        }
        for &i in &done {
            grants[i] = demands[i];
            remaining -= demands[i];
        }
        active = rest;
    }
    grants
}

/// Max-min fair rates per direction under the appliance's directional caps.
/// Grants come back in input order.
pub fn io_rates(appliance: &StorageAppliance, demands: &[IoDemand]) -> Vec<IoGrant> {
    let mut rates = vec![0u64; demands.len()];
    for (direction, cap) in [
        (Direction::Read, appliance.read_cap_kibps),
        (Direction::Write, appliance.write_cap_kibps),
    ] {
        let idx: Vec<usize> = (0..demands.len())
            .filter(|&i| demands[i].direction == direction)
            .collect();
        let wanted: Vec<u64> = idx.iter().map(|&i| demands[i].demand_kibps).collect();
        for (&i, rate) in idx.iter().zip(max_min_fair(cap, &wanted)) {
            rates[i] = rate;
        }
    }
    demands
        .iter()
        .zip(rates)
        .map(|(d, rate_kibps)| IoGrant {
            client_id: d.client_id.clone(),
            direction: d.direction,
            rate_kibps,
        })
        .collect()
}

/// Concurrency seen by one flow on a link.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkLoad {
    /// Flows active anywhere on the link, including this one.
    pub concurrent_flows: u32,
    /// Flows sharing an endpoint with this one, including itself.
    pub endpoint_flows: u32,
}

impl LinkLoad {
    pub const SOLO: LinkLoad = LinkLoad {
        concurrent_flows: 1,
        endpoint_flows: 1,
    };

    /// `n` flows between node-disjoint pairs.
    pub fn disjoint(n: u32) -> Self {
        Self {
            concurrent_flows: n,
            endpoint_flows: 1,
        }
    }
}

/// Seconds to move `bytes` over `link`. A non-blocking fat tree only divides
/// bandwidth among flows sharing an endpoint; a flat switch divides it among
/// all concurrent flows.
pub fn transfer_time(bytes: u64, link: &NetworkLink, load: LinkLoad) -> f64 {
    assert!(load.concurrent_flows >= 1 && load.endpoint_flows >= 1);
    if bytes == 0 {
        return 0.0;
    }
    let sharing = match link.topology {
        Topology::NonBlockingFatTree => load.endpoint_flows,
        Topology::Flat => load.concurrent_flows,
    };
    let effective_bps = link.bandwidth_gbps * 1e9 / f64::from(sharing);
    bytes as f64 * 8.0 / effective_bps
}

/// Seconds to perform `total_ops` metadata operations at `rate_ops_per_s`.
pub fn metadata_time(total_ops: u64, rate_ops_per_s: f64) -> f64 {
    assert!(rate_ops_per_s > 0.0, "metadata rate must be positive");
    total_ops as f64 / rate_ops_per_s
}
