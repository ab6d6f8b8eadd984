//! Problem instances, schedules, and an exhaustive reference solver.
//!
//! Activities are indexed `0..n`. PSPLib dummy source and sink activities are
//! kept as ordinary zero-duration, zero-demand activities. Time is integral and
//! an activity may end exactly at the horizon.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::tempo;

/// A generalized precedence `S[from] + lag <= S[to]`. A negative lag encodes a
/// maximal time lag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Precedence {
    pub from: usize,
    pub to: usize,
    pub lag: i64,
}

impl Precedence {
    pub fn new(from: usize, to: usize, lag: i64) -> Self {
        Precedence { from, to, lag }
    }
}

/// An RCPSP/max instance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Instance {
    pub durations: Vec<i64>,
    /// `demands[i][k]`: usage of resource `k` by activity `i`.
    pub demands: Vec<Vec<i64>>,
    pub capacities: Vec<i64>,
    pub precedences: Vec<Precedence>,
    /// Latest time any activity may finish. `None` means "not fixed by the
    /// instance"; solvers then fall back to [`tempo::trivial_horizon`].
    pub horizon: Option<i64>,
}

impl Instance {
    /// Number of activities.
    pub fn n(&self) -> usize {
        self.durations.len()
    }

    /// Number of resources.
    pub fn resources(&self) -> usize {
        self.capacities.len()
    }

    pub fn demand(&self, activity: usize, resource: usize) -> i64 {
        self.demands[activity][resource]
    }

    /// The explicit horizon, or the trivial makespan bound when none is set.
    pub fn effective_horizon(&self) -> i64 {
        self.horizon.unwrap_or_else(|| tempo::trivial_horizon(self))
    }

    pub fn with_horizon(mut self, horizon: Option<i64>) -> Self {
        self.horizon = horizon;
        self
    }

    /// The five-activity, single-resource network used throughout the docs and
    /// tests: durations (2,5,3,1,2), demands (3,2,1,2,2), capacity 4, horizon 15.
    pub fn small_example() -> Self {
        Instance {
            durations: vec![2, 5, 3, 1, 2],
            demands: vec![vec![3], vec![2], vec![1], vec![2], vec![2]],
            capacities: vec![4],
            precedences: vec![
                Precedence::new(0, 1, 2),
                Precedence::new(1, 2, 1),
                Precedence::new(2, 0, -6),
                Precedence::new(3, 4, 3),
                Precedence::new(4, 3, -3),
            ],
            horizon: Some(15),
        }
    }
}

/// A structural problem with an [`Instance`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    IndexOutOfRange { precedence: usize, activity: usize },
    SelfLoop { precedence: usize, activity: usize },
    NegativeDuration { activity: usize, duration: i64 },
    NegativeDemand { activity: usize, resource: usize, demand: i64 },
    DemandArity { activity: usize, expected: usize, found: usize },
    NonPositiveCapacity { resource: usize, capacity: i64 },
    NonPositiveHorizon { horizon: i64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::IndexOutOfRange { precedence, activity } => write!(
                f,
                "precedence #{precedence}: activity index {activity} out of range"
            ),
            Violation::SelfLoop { precedence, activity } => {
                write!(f, "precedence #{precedence}: self-loop on activity {activity}")
            }
            Violation::NegativeDuration { activity, duration } => {
                write!(f, "activity {activity}: negative duration {duration}")
            }
            Violation::NegativeDemand { activity, resource, demand } => write!(
                f,
                "activity {activity}: negative demand {demand} on resource {resource}"
            ),
            Violation::DemandArity { activity, expected, found } => write!(
                f,
                "activity {activity}: expected {expected} demand values, found {found}"
            ),
            Violation::NonPositiveCapacity { resource, capacity } => {
                write!(f, "resource {resource}: non-positive capacity {capacity}")
            }
            Violation::NonPositiveHorizon { horizon } => {
                write!(f, "non-positive horizon {horizon}")
            }
        }
    }
}

/// Reports every structural problem with `inst`. An empty list means the
/// instance is well formed.
pub fn validate(inst: &Instance) -> Vec<Violation> {
    let n = inst.n();
    let m = inst.resources();
    let mut out = Vec::new();
    for (activity, &duration) in inst.durations.iter().enumerate() {
        if duration < 0 {
            out.push(Violation::NegativeDuration { activity, duration });
        }
    }
    if inst.demands.len() != n {
        out.push(Violation::DemandArity {
            activity: inst.demands.len().min(n),
            expected: n,
            found: inst.demands.len(),
        });
    }
    for (activity, row) in inst.demands.iter().enumerate() {
        if row.len() != m {
            out.push(Violation::DemandArity { activity, expected: m, found: row.len() });
        }
        for (resource, &demand) in row.iter().enumerate() {
            if demand < 0 {
                out.push(Violation::NegativeDemand { activity, resource, demand });
            }
        }
    }
    for (resource, &capacity) in inst.capacities.iter().enumerate() {
        if capacity <= 0 {
            out.push(Violation::NonPositiveCapacity { resource, capacity });
        }
    }
    for (precedence, p) in inst.precedences.iter().enumerate() {
        for activity in [p.from, p.to] {
            if activity >= n {
                out.push(Violation::IndexOutOfRange { precedence, activity });
            }
        }
        if p.from == p.to {
            out.push(Violation::SelfLoop { precedence, activity: p.from });
        }
    }
    if let Some(horizon) = inst.horizon {
        if horizon <= 0 {
            out.push(Violation::NonPositiveHorizon { horizon });
        }
    }
    out
}

/// Start times for every activity together with the resulting makespan.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Schedule {
    pub starts: Vec<i64>,
    pub makespan: i64,
}

impl Schedule {
    /// Builds a schedule and computes its makespan. Missing durations count as
    /// zero so that arity mismatches surface in [`check_schedule`].
    pub fn new(inst: &Instance, starts: Vec<i64>) -> Self {
        let makespan = starts
            .iter()
            .enumerate()
            .map(|(i, &s)| s + inst.durations.get(i).copied().unwrap_or(0))
            .max()
            .unwrap_or(0);
        Schedule { starts, makespan }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScheduleViolation {
    Arity { expected: usize, found: usize },
    NegativeStart { activity: usize, start: i64 },
    Precedence { index: usize, precedence: Precedence },
    Overload { time: i64, resource: usize, usage: i64, capacity: i64 },
    ExceedsHorizon { activity: usize, end: i64, horizon: i64 },
    MakespanMismatch { stated: i64, actual: i64 },
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ScheduleViolation::Arity { expected, found } => {
                write!(f, "expected {expected} start times, found {found}")
            }
            ScheduleViolation::NegativeStart { activity, start } => {
                write!(f, "activity {activity}: negative start {start}")
            }
            ScheduleViolation::Precedence { index, precedence: p } => write!(
                f,
                "precedence #{index} violated: S[{}] + {} <= S[{}]",
                p.from, p.lag, p.to
            ),
            ScheduleViolation::Overload { time, resource, usage, capacity } => write!(
                f,
                "resource {resource} overloaded at t={time}: usage {usage} > capacity {capacity}"
            ),
            ScheduleViolation::ExceedsHorizon { activity, end, horizon } => write!(
                f,
                "activity {activity} exceeds horizon: ends at {end} > {horizon}"
            ),
            ScheduleViolation::MakespanMismatch { stated, actual } => {
                write!(f, "stated makespan {stated} but schedule ends at {actual}")
            }
        }
    }
}

/// Independent feasibility check of a schedule against precedences, resource
/// capacities and the horizon (when the instance fixes one).
pub fn check_schedule(inst: &Instance, sched: &Schedule) -> Result<(), Vec<ScheduleViolation>> {
    let n = inst.n();
    if sched.starts.len() != n {
        return Err(vec![ScheduleViolation::Arity { expected: n, found: sched.starts.len() }]);
    }
    let mut out = Vec::new();
    let s = &sched.starts;
    for (activity, &start) in s.iter().enumerate() {
        if start < 0 {
            out.push(ScheduleViolation::NegativeStart { activity, start });
        }
    }
    for (index, p) in inst.precedences.iter().enumerate() {
        if p.from < n && p.to < n && s[p.from] + p.lag > s[p.to] {
            out.push(ScheduleViolation::Precedence { index, precedence: *p });
        }
    }
    let actual = (0..n).map(|i| s[i] + inst.durations[i]).max().unwrap_or(0);
    if actual != sched.makespan {
        out.push(ScheduleViolation::MakespanMismatch { stated: sched.makespan, actual });
    }
    if let Some(horizon) = inst.horizon {
        for (activity, (&start, &p)) in s.iter().zip(&inst.durations).enumerate() {
            let end = start + p;
            if end > horizon {
                out.push(ScheduleViolation::ExceedsHorizon { activity, end, horizon });
            }
        }
    }
    let first = s.iter().copied().min().unwrap_or(0).min(0);
    let last = inst.horizon.unwrap_or(actual).max(actual);
    for (resource, &capacity) in inst.capacities.iter().enumerate() {
        for time in first..last {
            let usage: i64 = (0..n)
                .filter(|&i| s[i] <= time && time < s[i] + inst.durations[i])
                .map(|i| inst.demands[i][resource])
                .sum();
            if usage > capacity {
                out.push(ScheduleViolation::Overload { time, resource, usage, capacity });
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Result of [`brute_force_solve`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleResult {
    Optimal(Schedule),
    Infeasible,
    /// The state budget ran out. This says nothing about feasibility.
    Exhausted,
}

/// Exhaustive depth-first search over start tuples in `[0, horizon - p_i]`.
///
/// Partial assignments are pruned on precedences between assigned activities,
/// on resource overload, and on makespan once an incumbent exists. None of
/// these cuts removes a schedule better than the incumbent, so the result is
/// exact whenever the budget suffices. Intended for tiny instances only.
pub fn brute_force_solve(inst: &Instance, limit_states: u64) -> OracleResult {
    let n = inst.n();
    if n == 0 {
        return OracleResult::Optimal(Schedule { starts: Vec::new(), makespan: 0 });
    }
    let horizon = inst.effective_horizon();
    let mut dfs = Dfs {
        inst,
        horizon,
        starts: vec![0; n],
        usage: vec![vec![0; horizon.max(0) as usize]; inst.resources()],
        best: None,
        states: 0,
        limit: limit_states,
    };
    match dfs.run(0) {
        Err(Exhausted) => OracleResult::Exhausted,
        Ok(()) => match dfs.best {
            Some(best) => OracleResult::Optimal(best),
            None => OracleResult::Infeasible,
        },
    }
}

struct Exhausted;

struct Dfs<'a> {
    inst: &'a Instance,
    horizon: i64,
    starts: Vec<i64>,
    usage: Vec<Vec<i64>>,
    best: Option<Schedule>,
    states: u64,
    limit: u64,
}

impl Dfs<'_> {
    fn run(&mut self, depth: usize) -> Result<(), Exhausted> {
        let inst = self.inst;
        if depth == inst.n() {
            let sched = Schedule::new(inst, self.starts.clone());
            if self.best.as_ref().is_none_or(|b| sched.makespan < b.makespan) {
                self.best = Some(sched);
            }
            return Ok(());
        }
        let p = inst.durations[depth];
        // Ends must stay strictly below the incumbent's makespan.
        let mut latest = self.horizon - p;
        if let Some(best) = &self.best {
            latest = latest.min(best.makespan - 1 - p);
        }
        for start in 0..=latest {
            self.states += 1;
            if self.states > self.limit {
                return Err(Exhausted);
            }
            self.starts[depth] = start;
            if !self.precedences_ok(depth) || !self.fits(depth, start, p) {
                continue;
            }
            self.occupy(depth, start, p, 1);
            let res = self.run(depth + 1);
            self.occupy(depth, start, p, -1);
            res?;
            if let Some(best) = &self.best {
                if best.makespan - 1 - p < start + 1 {
                    break;
                }
            }
        }
        Ok(())
    }

    fn precedences_ok(&self, depth: usize) -> bool {
        self.inst.precedences.iter().all(|pr| {
            pr.from > depth || pr.to > depth || self.starts[pr.from] + pr.lag <= self.starts[pr.to]
        })
    }

    fn fits(&self, i: usize, start: i64, p: i64) -> bool {
        (0..self.inst.resources()).all(|k| {
            let r = self.inst.demands[i][k];
            r == 0
                || (start..start + p)
                    .all(|t| self.usage[k][t as usize] + r <= self.inst.capacities[k])
        })
    }

    fn occupy(&mut self, i: usize, start: i64, p: i64, sign: i64) {
        for k in 0..self.inst.resources() {
            let r = self.inst.demands[i][k];
            for t in start..start + p {
                self.usage[k][t as usize] += sign * r;
            }
        }
    }
}
