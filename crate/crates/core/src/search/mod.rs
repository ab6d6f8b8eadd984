//! Model construction, branching, and the two-phase solve.
//!
//! Phase one looks for any schedule within the horizon. Phase two rebuilds the
//! model with the found makespan as horizon and runs branch-and-bound,
//! tightening the objective at the root after every solution.

mod branching;
mod solver;

pub use branching::{mslf_pick, Action, Controller, Mode, Strategy, UnknownStrategy};
pub use solver::{Conflict, Solver, Stage};

use std::time::Duration;

use web_time::Instant;

use crate::engine::{ClauseKind, Learnt};
use crate::lits::{DomainView, IntVar, Lit, Owner, Trail};
use crate::model::{check_schedule, validate, Instance, Schedule};
use crate::props::{Task, Timetable};
use crate::tempo::{compute_temporal, disjunctive_pairs, Infeasible, TemporalInfo};

/// Node threshold for hybrid strategies in the optimisation phase.
pub const PHASE2_SWITCH_NODES: u64 = 500;

/// Node threshold for hybrid branching in the feasibility phase.
pub fn phase1_switch_nodes(n: usize) -> u64 {
    5 * n as u64
}

/// The constraint model of one instance under one horizon.
#[derive(Clone, Debug)]
pub struct RcpspModel {
    pub solver: Solver,
    pub starts: Vec<IntVar>,
    pub objective: IntVar,
    /// `(i, j, b)`: `b` true means `i` finishes before `j` starts.
    pub pairs: Vec<(usize, usize, Lit)>,
    pub temporal: TemporalInfo,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BuildError {
    Temporal(Infeasible),
    /// Propagation failed before any decision.
    RootFailure,
}

/// The meaning of a solver literal in terms of the scheduling model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Atom {
    /// `S[activity] <= value`.
    StartLe { activity: usize, value: i64 },
    /// `objective <= value`.
    ObjectiveLe(i64),
    /// `first` finishes no later than `second` starts.
    Before { first: usize, second: usize },
    Constant(bool),
}

impl Atom {
    /// Truth of the atom under a complete schedule.
    pub fn holds(&self, inst: &Instance, starts: &[i64]) -> bool {
        match *self {
            Atom::StartLe { activity, value } => starts[activity] <= value,
            Atom::ObjectiveLe(v) => Schedule::new(inst, starts.to_vec()).makespan <= v,
            Atom::Before { first, second } => starts[first] + inst.durations[first] <= starts[second],
            Atom::Constant(b) => b,
        }
    }
}

impl RcpspModel {
    pub fn build(inst: &Instance, horizon: i64) -> Result<Self, BuildError> {
        let temporal = compute_temporal(inst, horizon).map_err(BuildError::Temporal)?;
        let mut solver = Solver::new();
        let starts: Vec<IntVar> = (0..inst.n())
            .map(|i| solver.new_int_var(temporal.est[i], temporal.lst[i]).expect("non-empty window"))
            .collect();
        let objective = solver
            .new_int_var(temporal.makespan_lower_bound(), horizon)
            .map_err(|_| BuildError::RootFailure)?;
        for p in &inst.precedences {
            solver.post_precedence(starts[p.from], starts[p.to], p.lag);
        }
        for (k, &cap) in inst.capacities.iter().enumerate() {
            solver.post_timetable(Timetable::new(
                cap,
                (0..inst.n()).map(|i| Task {
                    start: starts[i],
                    duration: inst.durations[i],
                    demand: inst.demand(i, k),
                }),
            ));
        }
        let mut pairs = Vec::new();
        for (i, j) in disjunctive_pairs(inst) {
            let b = solver.new_bool_var();
            solver.post_reified(b, starts[i], starts[j], inst.durations[i]);
            solver.post_reified(!b, starts[j], starts[i], inst.durations[j]);
            pairs.push((i, j, b));
        }
        for (i, &x) in starts.iter().enumerate() {
            solver.post_precedence(x, objective, temporal.tail[i]);
        }
        solver.fixpoint().map_err(|_| BuildError::RootFailure)?;
        Ok(RcpspModel { solver, starts, objective, pairs, temporal })
    }

    pub fn trail(&self) -> &Trail {
        &self.solver.engine.trail
    }

    /// Current start-time windows.
    pub fn windows(&self) -> Vec<(i64, i64)> {
        self.starts.iter().map(|&x| self.trail().domain_of(x)).collect()
    }

    /// Start times, if every start variable is fixed.
    pub fn assignment(&self) -> Option<Vec<i64>> {
        let t = self.trail();
        self.starts.iter().map(|&x| t.is_fixed(x).then(|| t.lb(x))).collect()
    }

    /// Returns the atom of `l` and whether `l` is its positive form.
    pub fn describe(&self, l: Lit) -> (Atom, bool) {
        describe_lit(self.trail(), self.objective, &self.pairs, l)
    }
}

fn describe_lit(trail: &Trail, objective: IntVar, pairs: &[(usize, usize, Lit)], l: Lit) -> (Atom, bool) {
    if l.var() == Lit::TRUE.var() {
        return (Atom::Constant(true), l.is_positive());
    }
    let atom = match trail.owner(l.var()) {
        Owner::Bound { var, value } if var == objective => Atom::ObjectiveLe(value),
        Owner::Bound { var, value } => Atom::StartLe { activity: var.index(), value },
        Owner::Free => {
            let &(first, second, _) = pairs
                .iter()
                .find(|p| p.2.var() == l.var())
                .expect("free literal is a disjunction");
            Atom::Before { first, second }
        }
    };
    (atom, l.is_positive())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Feasible,
    Infeasible,
    Unknown,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Optimal => "OPTIMAL",
            Status::Feasible => "FEASIBLE",
            Status::Infeasible => "INFEASIBLE",
            Status::Unknown => "UNKNOWN",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseStats {
    pub horizon: i64,
    pub nodes: u64,
    pub fails: u64,
    pub restarts: u64,
    pub solutions: u64,
    pub runtime: Duration,
    pub restart_intervals: Vec<u64>,
    pub switched_at: Option<u64>,
    pub switch_threshold: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Stats {
    pub nodes: u64,
    pub fails: u64,
    pub restarts: u64,
    pub solutions: u64,
    pub runtime: Duration,
    pub phase1_time: Duration,
    pub phases: Vec<PhaseStats>,
}

impl Stats {
    fn add(&mut self, p: PhaseStats) {
        self.nodes += p.nodes;
        self.fails += p.fails;
        self.restarts += p.restarts;
        self.solutions += p.solutions;
        self.phases.push(p);
    }
}

/// One learned nogood as seen during search.
#[derive(Clone, Debug, PartialEq)]
pub struct NogoodRecord {
    /// 1 or 2 for the search phase.
    pub phase: u8,
    pub horizon: i64,
    /// Objective upper bound at the root when the nogood was derived.
    pub objective_ub: i64,
    pub conflict_level: u32,
    pub backjump_level: u32,
    /// Each literal as `(atom, positive)`; the asserting literal first.
    pub lits: Vec<(Atom, bool)>,
    pub levels: Vec<u32>,
    /// Literal values after the backjump, before the nogood is asserted.
    pub values_after_backjump: Vec<Option<bool>>,
}

impl NogoodRecord {
    /// Whether the clause is satisfied by a complete schedule.
    pub fn satisfied_by(&self, inst: &Instance, starts: &[i64]) -> bool {
        self.lits.iter().any(|&(a, pos)| a.holds(inst, starts) == pos)
    }
}

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub strategy: Strategy,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    /// Perturbs activity tie-breaking; 0 keeps index order.
    pub seed: u64,
    pub record_nogoods: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            strategy: Strategy::HotRestart,
            time_limit: None,
            node_limit: None,
            seed: 0,
            record_nogoods: false,
        }
    }
}

impl SolveConfig {
    pub fn new(strategy: Strategy) -> Self {
        SolveConfig { strategy, ..Default::default() }
    }

    pub fn time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub status: Status,
    pub schedule: Option<Schedule>,
    pub stats: Stats,
    /// Makespans of the solutions found in the optimisation phase, in order.
    pub improvements: Vec<i64>,
    pub nogoods: Vec<NogoodRecord>,
}

impl SolveOutcome {
    pub fn makespan(&self) -> Option<i64> {
        self.schedule.as_ref().map(|s| s.makespan)
    }

    fn new(status: Status) -> Self {
        SolveOutcome {
            status,
            schedule: None,
            stats: Stats::default(),
            improvements: Vec::new(),
            nogoods: Vec::new(),
        }
    }
}

struct Budget {
    deadline: Option<Instant>,
    nodes_left: Option<u64>,
}

impl Budget {
    fn exhausted(&self, nodes: u64) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d) || self.nodes_left.is_some_and(|n| nodes >= n)
    }
}

enum PhaseEnd {
    /// The search space under the current bounds is empty.
    Exhausted,
    Limit,
    /// First solution found in a satisfaction phase.
    Found,
}

struct Phase<'a> {
    inst: &'a Instance,
    model: RcpspModel,
    controller: Controller,
    optimize: bool,
    phase: u8,
    stats: PhaseStats,
    best: Option<Schedule>,
    improvements: Vec<i64>,
    nogoods: Option<Vec<NogoodRecord>>,
}

impl Phase<'_> {
    fn run(&mut self, budget: &Budget) -> PhaseEnd {
        loop {
            if budget.exhausted(self.controller.nodes()) {
                return PhaseEnd::Limit;
            }
            if let Err(c) = self.model.solver.fixpoint() {
                self.stats.fails += 1;
                if !self.resolve(c) {
                    return PhaseEnd::Exhausted;
                }
                continue;
            }
            if let Some(starts) = self.model.assignment() {
                let sched = Schedule::new(self.inst, starts);
                debug_assert!(check_schedule(self.inst, &sched).is_ok(), "{sched:?}");
                self.stats.solutions += 1;
                let m = sched.makespan;
                self.best = Some(sched);
                if !self.optimize {
                    return PhaseEnd::Found;
                }
                self.improvements.push(m);
                self.model.solver.backjump(0);
                let bound = self.model.trail().le(self.model.objective, m - 1);
                if self.model.solver.add_clause(&[bound], ClauseKind::Original).is_err() {
                    return PhaseEnd::Exhausted;
                }
                continue;
            }
            match self.controller.before_decision() {
                Action::Continue => {}
                Action::Restart | Action::Switch => {
                    self.stats.restarts += 1;
                    self.model.solver.backjump(0);
                    continue;
                }
            }
            let lit = match self.controller.mode() {
                Mode::Mslf => {
                    let (i, v) = mslf_pick(&self.model.starts, self.model.trail()).expect("unfixed start");
                    self.model.trail().le(self.model.starts[i], v)
                }
                Mode::Vsids => self.model.solver.engine.pick_vsids_literal().expect("unassigned literal"),
            };
            self.model.solver.decide(lit);
            self.controller.on_decision();
        }
    }

    /// Learns from a conflict. Returns false if it holds at the root.
    fn resolve(&mut self, c: Conflict) -> bool {
        let RcpspModel { solver, objective, pairs, temporal, .. } = &mut self.model;
        let Some(log) = self.nogoods.as_mut() else {
            return solver.resolve(c, |_, _, _| {}).is_some();
        };
        let (objective, phase) = (*objective, self.phase);
        let mut rec: Option<NogoodRecord> = None;
        let learnt = solver.resolve(c, |stage, learnt: &Learnt, e| match stage {
            Stage::Analyzed => {
                let t = &e.trail;
                rec = Some(NogoodRecord {
                    phase,
                    horizon: temporal.horizon,
                    objective_ub: t.root_ub(objective),
                    conflict_level: t.decision_level(),
                    backjump_level: learnt.backjump_level,
                    lits: learnt.lits.iter().map(|&l| describe_lit(t, objective, pairs, l)).collect(),
                    levels: learnt.lits.iter().map(|l| t.level(l.var())).collect(),
                    values_after_backjump: Vec::new(),
                });
            }
            Stage::AfterBackjump => {
                if let Some(r) = rec.as_mut() {
                    r.values_after_backjump = learnt.lits.iter().map(|&l| e.trail.value(l)).collect();
                }
            }
        });
        log.extend(rec);
        learnt.is_some()
    }

    fn finish(mut self, started: Instant) -> (PhaseStats, Option<Schedule>, Vec<i64>, Vec<NogoodRecord>) {
        self.stats.nodes = self.controller.nodes();
        self.stats.runtime = started.elapsed();
        self.stats.restart_intervals = std::mem::take(&mut self.controller.restart_intervals);
        self.stats.switched_at = self.controller.switched_at;
        (self.stats, self.best, self.improvements, self.nogoods.unwrap_or_default())
    }
}

fn new_phase<'a>(
    inst: &'a Instance,
    model: RcpspModel,
    strategy: Strategy,
    threshold: u64,
    optimize: bool,
    phase: u8,
    cfg: &SolveConfig,
) -> Phase<'a> {
    let mut model = model;
    model.solver.engine.seed_activities(cfg.seed);
    let hybrid = matches!(strategy, Strategy::HotStart | Strategy::HotRestart);
    Phase {
        inst,
        stats: PhaseStats {
            horizon: model.temporal.horizon,
            switch_threshold: hybrid.then_some(threshold),
            ..Default::default()
        },
        model,
        controller: Controller::new(strategy, threshold),
        optimize,
        phase,
        best: None,
        improvements: Vec::new(),
        nogoods: cfg.record_nogoods.then(Vec::new),
    }
}

/// Solves an instance: feasibility with hot-start branching, then
/// branch-and-bound on the makespan with the configured strategy.
///
/// # Panics
/// If the instance fails [`validate`].
pub fn solve(inst: &Instance, cfg: &SolveConfig) -> SolveOutcome {
    let violations = validate(inst);
    assert!(violations.is_empty(), "invalid instance: {violations:?}");
    let started = Instant::now();
    let mut budget = Budget {
        deadline: cfg.time_limit.map(|d| started + d),
        nodes_left: cfg.node_limit,
    };
    if inst.n() == 0 {
        let mut out = SolveOutcome::new(Status::Optimal);
        out.schedule = Some(Schedule::new(inst, Vec::new()));
        return out;
    }
    if budget.exhausted(0) {
        let mut out = SolveOutcome::new(Status::Unknown);
        out.stats.runtime = started.elapsed();
        return out;
    }

    // Phase one.
    let mut out = SolveOutcome::new(Status::Unknown);
    let model = match RcpspModel::build(inst, inst.effective_horizon()) {
        Ok(m) => m,
        Err(_) => {
            out.status = Status::Infeasible;
            out.stats.runtime = started.elapsed();
            out.stats.phase1_time = out.stats.runtime;
            return out;
        }
    };
    let mut p1 = new_phase(inst, model, Strategy::HotStart, phase1_switch_nodes(inst.n()), false, 1, cfg);
    let end = p1.run(&budget);
    let (stats, first, _, nogoods) = p1.finish(started);
    let used = stats.nodes;
    out.stats.add(stats);
    out.nogoods = nogoods;
    out.stats.phase1_time = started.elapsed();
    let first = match end {
        PhaseEnd::Exhausted => {
            out.status = Status::Infeasible;
            out.stats.runtime = started.elapsed();
            return out;
        }
        PhaseEnd::Limit => {
            out.stats.runtime = started.elapsed();
            return out;
        }
        PhaseEnd::Found => first.expect("solution recorded"),
    };
    budget.nodes_left = budget.nodes_left.map(|n| n.saturating_sub(used));

    // Phase two.
    let p2_start = Instant::now();
    let ub = first.makespan;
    out.status = Status::Feasible;
    out.schedule = Some(first);
    let model = match RcpspModel::build(inst, ub) {
        Ok(m) => m,
        Err(_) => {
            out.stats.runtime = started.elapsed();
            return out;
        }
    };
    let mut p2 = new_phase(inst, model, cfg.strategy, PHASE2_SWITCH_NODES, true, 2, cfg);
    let end = p2.run(&budget);
    let (stats, best, improvements, nogoods) = p2.finish(p2_start);
    out.stats.add(stats);
    out.nogoods.extend(nogoods);
    out.improvements = improvements;
    if let Some(b) = best {
        out.schedule = Some(b);
    }
    if matches!(end, PhaseEnd::Exhausted) {
        out.status = Status::Optimal;
    }
    out.stats.runtime = started.elapsed();
    out
}
