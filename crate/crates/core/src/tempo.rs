//! Activity-on-node network preprocessing: time windows, tails, and
//! disjunctive pairs.
//!
//! Node numbering: activities keep their indices `0..n`, the source is node `n`
//! and the sink is node `n + 1`.

use std::fmt;

use crate::model::Instance;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub weight: i64,
}

/// The weighted digraph with arcs `(i, j, -d_ij)` for every precedence plus
/// `(source, i, 0)` and `(i, sink, -p_i)` for every activity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AonGraph {
    pub activities: usize,
    pub arcs: Vec<Arc>,
}

impl AonGraph {
    pub fn source(&self) -> usize {
        self.activities
    }

    pub fn sink(&self) -> usize {
        self.activities + 1
    }

    pub fn node_count(&self) -> usize {
        self.activities + 2
    }

    pub fn reversed(&self) -> AonGraph {
        AonGraph {
            activities: self.activities,
            arcs: self
                .arcs
                .iter()
                .map(|a| Arc { from: a.to, to: a.from, weight: a.weight })
                .collect(),
        }
    }
}

pub fn build_graph(inst: &Instance) -> AonGraph {
    let n = inst.n();
    let mut arcs = Vec::with_capacity(inst.precedences.len() + 2 * n);
    arcs.extend(
        inst.precedences
            .iter()
            .map(|p| Arc { from: p.from, to: p.to, weight: -p.lag }),
    );
    for i in 0..n {
        arcs.push(Arc { from: n, to: i, weight: 0 });
        arcs.push(Arc { from: i, to: n + 1, weight: -inst.durations[i] });
    }
    AonGraph { activities: n, arcs }
}

/// A cycle of negative total weight, listed as consecutive nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NegativeCycle {
    pub nodes: Vec<usize>,
}

/// Bellman-Ford from `source`. Unreachable nodes get `None`.
pub fn shortest_paths(g: &AonGraph, source: usize) -> Result<Vec<Option<i64>>, NegativeCycle> {
    let nodes = g.node_count();
    let mut dist: Vec<Option<i64>> = vec![None; nodes];
    let mut pred: Vec<Option<usize>> = vec![None; nodes];
    dist[source] = Some(0);
    let mut last_relaxed = None;
    for _ in 0..nodes {
        last_relaxed = None;
        for a in &g.arcs {
            let Some(du) = dist[a.from] else { continue };
            let cand = du + a.weight;
            if dist[a.to].is_none_or(|dv| cand < dv) {
                dist[a.to] = Some(cand);
                pred[a.to] = Some(a.from);
                last_relaxed = Some(a.to);
            }
        }
        if last_relaxed.is_none() {
            return Ok(dist);
        }
    }
    // A relaxation in pass |V| proves a negative cycle on the predecessor chain.
    let mut v = last_relaxed.expect("relaxed in final pass");
    for _ in 0..nodes {
        v = pred[v].expect("relaxed node has a predecessor");
    }
    let mut cycle = vec![v];
    let mut u = pred[v].expect("cycle node has a predecessor");
    while u != v {
        cycle.push(u);
        u = pred[u].expect("cycle node has a predecessor");
    }
    cycle.reverse();
    Err(NegativeCycle { nodes: cycle })
}

/// Earliest/latest start times and tails under a given horizon.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemporalInfo {
    pub horizon: i64,
    pub est: Vec<i64>,
    pub lst: Vec<i64>,
    /// Minimum time from an activity's start to project completion.
    pub tail: Vec<i64>,
}

impl TemporalInfo {
    /// Lower bound on the makespan implied by the network alone.
    pub fn makespan_lower_bound(&self) -> i64 {
        self.est.iter().zip(&self.tail).map(|(e, t)| e + t).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Infeasible {
    NegativeCycle(NegativeCycle),
    EmptyWindow { activity: usize, est: i64, lst: i64 },
}

impl fmt::Display for Infeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infeasible::NegativeCycle(c) => {
                write!(f, "precedence network has a negative cycle through {:?}", c.nodes)
            }
            Infeasible::EmptyWindow { activity, est, lst } => write!(
                f,
                "activity {activity} has empty start window [{est}, {lst}]"
            ),
        }
    }
}

/// Runs Bellman-Ford once from the source and once on the reversed graph from
/// the sink.
pub fn compute_temporal(inst: &Instance, horizon: i64) -> Result<TemporalInfo, Infeasible> {
    let g = build_graph(inst);
    let n = inst.n();
    let from_source = shortest_paths(&g, g.source()).map_err(Infeasible::NegativeCycle)?;
    let to_sink = shortest_paths(&g.reversed(), g.sink()).map_err(Infeasible::NegativeCycle)?;
    let mut est = Vec::with_capacity(n);
    let mut tail = Vec::with_capacity(n);
    for i in 0..n {
        est.push(-from_source[i].expect("every activity is reachable from the source"));
        tail.push(-to_sink[i].expect("every activity reaches the sink"));
    }
    let lst: Vec<i64> = tail.iter().map(|t| horizon - t).collect();
    if let Some(activity) = (0..n).find(|&i| est[i] > lst[i]) {
        return Err(Infeasible::EmptyWindow { activity, est: est[activity], lst: lst[activity] });
    }
    Ok(TemporalInfo { horizon, est, lst, tail })
}

/// All pairs `(i, j)`, `i < j`, whose joint demand exceeds some capacity.
///
/// Zero-duration activities never occupy a resource, so they are never paired.
pub fn disjunctive_pairs(inst: &Instance) -> Vec<(usize, usize)> {
    let n = inst.n();
    let mut pairs = Vec::new();
    for i in 0..n {
        if inst.durations[i] == 0 {
            continue;
        }
        for j in i + 1..n {
            if inst.durations[j] == 0 {
                continue;
            }
            let clash = (0..inst.resources())
                .any(|k| inst.demand(i, k) + inst.demand(j, k) > inst.capacities[k]);
            if clash {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// `sum_i max(p_i, max_j d_ij)`, an upper bound on the optimal makespan of a
/// feasible instance.
pub fn trivial_horizon(inst: &Instance) -> i64 {
    let mut longest_out = vec![i64::MIN; inst.n()];
    for p in &inst.precedences {
        if let Some(slot) = longest_out.get_mut(p.from) {
            *slot = (*slot).max(p.lag);
        }
    }
    inst.durations
        .iter()
        .zip(longest_out)
        .map(|(&p, d)| p.max(d))
        .sum()
}
