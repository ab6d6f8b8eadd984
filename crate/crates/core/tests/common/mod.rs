#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcm_core::model::{Instance, Precedence};
use rcm_core::search::Atom;
use rcm_core::tempo::trivial_horizon;

/// Random small instance: up to 6 activities, up to 2 resources with
/// capacity at most 4, durations at most 4, lags in [-6, 6], and the trivial
/// horizon clamped to [1, 25].
pub fn random_instance(rng: &mut impl Rng) -> Instance {
    let n = rng.gen_range(1..=6);
    let k = rng.gen_range(1..=2);
    let capacities: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=4)).collect();
    let durations: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=4)).collect();
    let demands: Vec<Vec<i64>> = (0..n)
        .map(|_| capacities.iter().map(|&c| rng.gen_range(0..=c)).collect())
        .collect();
    let mut precedences = Vec::new();
    if n > 1 {
        for _ in 0..rng.gen_range(0..=n + 2) {
            let from = rng.gen_range(0..n);
            let mut to = rng.gen_range(0..n - 1);
            if to >= from {
                to += 1;
            }
            precedences.push(Precedence::new(from, to, rng.gen_range(-6..=6)));
        }
    }
    let mut inst = Instance { durations, demands, capacities, precedences, horizon: None };
    inst.horizon = Some(trivial_horizon(&inst).clamp(1, 25));
    inst
}

/// The fixed acceptance corpus.
pub fn corpus(count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_2009);
    (0..count).map(|_| random_instance(&mut rng)).collect()
}

/// Extra restrictions for [`find_schedule`].
#[derive(Clone, Debug, Default)]
pub struct Restrictions {
    pub lo: Vec<Option<i64>>,
    pub hi: Vec<Option<i64>>,
    /// `S[i] + d <= S[j]`.
    pub extra: Vec<(usize, usize, i64)>,
    pub min_makespan: Option<i64>,
    pub max_makespan: Option<i64>,
}

impl Restrictions {
    pub fn new(n: usize) -> Self {
        Restrictions { lo: vec![None; n], hi: vec![None; n], ..Default::default() }
    }

    /// Adds the restriction that `atom` has truth value `value`.
    pub fn require(&mut self, inst: &Instance, atom: Atom, value: bool) -> bool {
        match (atom, value) {
            (Atom::Constant(b), v) => return b == v,
            (Atom::StartLe { activity, value: v }, true) => {
                let h = &mut self.hi[activity];
                *h = Some(h.map_or(v, |x| x.min(v)));
            }
            (Atom::StartLe { activity, value: v }, false) => {
                let l = &mut self.lo[activity];
                *l = Some(l.map_or(v + 1, |x| x.max(v + 1)));
            }
            (Atom::ObjectiveLe(v), true) => {
                self.max_makespan = Some(self.max_makespan.map_or(v, |x| x.min(v)));
            }
            (Atom::ObjectiveLe(v), false) => {
                self.min_makespan = Some(self.min_makespan.map_or(v + 1, |x| x.max(v + 1)));
            }
            (Atom::Before { first, second }, true) => {
                self.extra.push((first, second, inst.durations[first]));
            }
            (Atom::Before { first, second }, false) => {
                // Disjunctive pairs never overlap, so the other order holds.
                self.extra.push((second, first, inst.durations[second]));
            }
        }
        true
    }
}

/// Longest-path windows by Floyd-Warshall over the lags, the start bounds,
/// and the horizon. `None` when the constraints are inconsistent.
fn windows(n: usize, arcs: &[(usize, usize, i64)], lo: &[i64], hi: &[i64]) -> Option<(Vec<i64>, Vec<i64>)> {
    // Node n is time zero. dist[u][v] = longest known lag from u to v.
    let m = n + 1;
    let mut dist = vec![vec![i64::MIN; m]; m];
    for (u, row) in dist.iter_mut().enumerate() {
        row[u] = 0;
    }
    let relax = |u: usize, v: usize, d: i64, dist: &mut Vec<Vec<i64>>| {
        if d > dist[u][v] {
            dist[u][v] = d;
        }
    };
    for &(i, j, d) in arcs {
        relax(i, j, d, &mut dist);
    }
    for i in 0..n {
        relax(n, i, lo[i], &mut dist);
        relax(i, n, -hi[i], &mut dist);
    }
    for k in 0..m {
        for u in 0..m {
            if dist[u][k] == i64::MIN {
                continue;
            }
            for v in 0..m {
                if dist[k][v] != i64::MIN && dist[u][k] + dist[k][v] > dist[u][v] {
                    dist[u][v] = dist[u][k] + dist[k][v];
                }
            }
        }
    }
    if (0..m).any(|u| dist[u][u] > 0) {
        return None;
    }
    let est: Vec<i64> = (0..n).map(|i| dist[n][i]).collect();
    let lst: Vec<i64> = (0..n).map(|i| -dist[i][n]).collect();
    Some((est, lst))
}

/// Exhaustive search for a schedule within `horizon` that meets `r`.
/// Activities are fixed in index order; after each assignment the windows of
/// the rest are recomputed.
pub fn find_schedule(inst: &Instance, horizon: i64, r: &Restrictions) -> Option<Vec<i64>> {
    let n = inst.n();
    let mut arcs: Vec<(usize, usize, i64)> = inst.precedences.iter().map(|p| (p.from, p.to, p.lag)).collect();
    arcs.extend_from_slice(&r.extra);
    let cap = r.max_makespan.map_or(horizon, |m| m.min(horizon));
    let lo: Vec<i64> = (0..n).map(|i| r.lo[i].unwrap_or(0).max(0)).collect();
    let hi: Vec<i64> = (0..n).map(|i| r.hi[i].map_or(cap - inst.durations[i], |h| h.min(cap - inst.durations[i]))).collect();
    let mut starts = vec![0; n];
    dfs(inst, &arcs, &lo, &hi, 0, &mut starts, r.min_makespan.unwrap_or(i64::MIN)).then_some(starts)
}

fn dfs(
    inst: &Instance,
    arcs: &[(usize, usize, i64)],
    lo: &[i64],
    hi: &[i64],
    next: usize,
    starts: &mut [i64],
    min_makespan: i64,
) -> bool {
    let n = inst.n();
    let Some((est, lst)) = windows(n, arcs, lo, hi) else { return false };
    if (0..n).any(|i| est[i] > lst[i]) {
        return false;
    }
    if next == n {
        let s: Vec<i64> = est.clone();
        let makespan = (0..n).map(|i| s[i] + inst.durations[i]).max().unwrap_or(0);
        if makespan < min_makespan || !resources_ok(inst, &s) {
            return false;
        }
        starts.copy_from_slice(&s);
        return true;
    }
    for v in est[next]..=lst[next] {
        let (mut lo2, mut hi2) = (lo.to_vec(), hi.to_vec());
        lo2[next] = v;
        hi2[next] = v;
        if !resources_ok(inst, &lo2[..=next]) {
            continue;
        }
        if dfs(inst, arcs, &lo2, &hi2, next + 1, starts, min_makespan) {
            return true;
        }
    }
    false
}

/// Capacity check for the activities `0..starts.len()`.
fn resources_ok(inst: &Instance, starts: &[i64]) -> bool {
    starts.iter().all(|&t| {
        (0..inst.resources()).all(|k| {
            let used: i64 = (0..starts.len())
                .filter(|&i| starts[i] <= t && t < starts[i] + inst.durations[i])
                .map(|i| inst.demand(i, k))
                .sum();
            used <= inst.capacities[k]
        })
    })
}

/// Optimal makespan by increasing the makespan cap until a schedule exists.
pub fn optimum(inst: &Instance) -> Option<i64> {
    let horizon = inst.effective_horizon();
    let r = Restrictions::new(inst.n());
    find_schedule(inst, horizon, &r)?;
    (0..=horizon).find(|&m| {
        let mut r = Restrictions::new(inst.n());
        r.max_makespan = Some(m);
        find_schedule(inst, horizon, &r).is_some()
    })
}
