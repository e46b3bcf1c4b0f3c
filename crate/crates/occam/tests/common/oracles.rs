//! Reference implementations written independently of the engine.

/// `[millicores, memory, gpus]`.
pub type Vec3 = [u64; 3];

fn fits(req: &Vec3, free: &Vec3) -> bool {
    req.iter().zip(free).all(|(r, f)| r <= f)
}

/// Greedy walk over the queue: each job takes the slot with the
/// lexicographically smallest leftover, earliest slot on ties. Returns the
/// chosen slot index per job.
pub fn greedy_walk(jobs: &[Vec3], slots: &[Vec3]) -> Vec<Option<usize>> {
    let mut free = slots.to_vec();
    let mut out = Vec::with_capacity(jobs.len());
    for job in jobs {
        let mut best: Option<(usize, Vec3)> = None;
        for (k, f) in free.iter().enumerate() {
            if !fits(job, f) {
                continue;
            }
            let left = [f[0] - job[0], f[1] - job[1], f[2] - job[2]];
            let better = match &best {
                None => true,
                Some((_, b)) => left < *b,
            };
            if better {
                best = Some((k, left));
            }
        }
        if let Some((k, left)) = best {
            free[k] = left;
        }
        out.push(best.map(|(k, _)| k));
    }
    out
}

/// Maximality: no unmatched job fits into any slot's remaining capacity.
pub fn is_maximal(jobs: &[Vec3], slots: &[Vec3], chosen: &[Option<usize>]) -> bool {
    let mut free = slots.to_vec();
    for (job, c) in jobs.iter().zip(chosen) {
        if let Some(k) = c {
            for d in 0..3 {
                match free[*k][d].checked_sub(job[d]) {
                    Some(v) => free[*k][d] = v,
                    None => return false,
                }
            }
        }
    }
    jobs.iter()
        .zip(chosen)
        .filter(|(_, c)| c.is_none())
        .all(|(job, _)| free.iter().all(|f| !fits(job, f)))
}

/// Smallest achievable locked-step time `max(w_i / s_i)` over all splits of
/// `work` quanta among the nodes, by exhaustive search.
pub fn brute_force_locked_step(speeds: &[u32], work: u32) -> f64 {
    fn go(speeds: &[u32], left: u32, acc: f64) -> f64 {
        match speeds {
            [] => unreachable!(),
            [last] => acc.max(f64::from(left) / f64::from(*last)),
            [s, rest @ ..] => (0..=left)
                .map(|w| go(rest, left - w, acc.max(f64::from(w) / f64::from(*s))))
                .fold(f64::INFINITY, f64::min),
        }
    }
    go(speeds, work, 0.0)
}

/// Metadata operations of an mdtest run, counted by walking the directory
/// tree: each rank owns a tree of the given depth and fan-out, every
/// directory holds `items` entries, and each entry is touched once per
/// phase and iteration.
pub fn mdtest_ops(
    ranks: u64,
    depth: u32,
    fanout: u64,
    items: u64,
    iterations: u64,
    phases: u64,
) -> u64 {
    fn dirs(level: u32, depth: u32, fanout: u64) -> u64 {
        if level == depth {
            return 1;
        }
        1 + (0..fanout)
            .map(|_| dirs(level + 1, depth, fanout))
            .sum::<u64>()
    }
    ranks * dirs(0, depth, fanout) * items * iterations * phases
}
