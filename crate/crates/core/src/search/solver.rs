//! Propagation kernel: an [`Engine`] hosting explaining propagators.
//!
//! Every inference a propagator makes is turned into an explanation clause
//! and handed to the engine, so unit propagation and conflict analysis see one
//! uniform clause database.

use std::collections::VecDeque;

use crate::engine::{AddOutcome, ClauseKind, Engine, Learnt};
use crate::lits::{ClauseRef, IntVar, Lit, LitError, Owner, Pred};
use crate::props::{Explanation, PrecedenceProp, Propagator, ReifiedPrecProp, Timetable};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conflict {
    /// A clause false under the current assignment.
    Clause(ClauseRef),
    /// A clause false at decision level 0.
    Root,
}

#[derive(Clone, Debug)]
pub struct Solver {
    pub engine: Engine,
    props: Vec<Propagator>,
    int_subs: Vec<Vec<usize>>,
    bool_subs: Vec<Vec<usize>>,
    queues: Vec<VecDeque<usize>>,
    queued: Vec<bool>,
    wake_head: usize,
    buf: Vec<Explanation>,
    /// When set, every explanation clause is appended here.
    pub explanation_log: Option<Vec<Vec<Pred>>>,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

impl Solver {
    pub fn new() -> Self {
        Solver {
            engine: Engine::new(),
            props: Vec::new(),
            int_subs: Vec::new(),
            bool_subs: Vec::new(),
            queues: vec![VecDeque::new(); Propagator::PRIORITIES],
            queued: Vec::new(),
            wake_head: 0,
            buf: Vec::new(),
            explanation_log: None,
        }
    }

    pub fn new_int_var(&mut self, lo: i64, hi: i64) -> Result<IntVar, LitError> {
        let x = self.engine.new_int_var(lo, hi)?;
        self.int_subs.push(Vec::new());
        Ok(x)
    }

    pub fn new_bool_var(&mut self) -> Lit {
        self.engine.new_bool_var()
    }

    pub fn post(&mut self, p: Propagator) -> usize {
        let id = self.props.len();
        for x in p.int_vars() {
            self.int_subs[x.index()].push(id);
        }
        if let Some(c) = p.control() {
            let v = c.var().index();
            if self.bool_subs.len() <= v {
                self.bool_subs.resize_with(v + 1, Vec::new);
            }
            self.bool_subs[v].push(id);
        }
        self.queues[p.priority()].push_back(id);
        self.queued.push(true);
        self.props.push(p);
        id
    }

    pub fn post_precedence(&mut self, from: IntVar, to: IntVar, lag: i64) -> usize {
        self.post(Propagator::Precedence(PrecedenceProp { from, to, lag }))
    }

    pub fn post_reified(&mut self, control: Lit, from: IntVar, to: IntVar, lag: i64) -> usize {
        self.post(Propagator::Reified(ReifiedPrecProp {
            control,
            prec: PrecedenceProp { from, to, lag },
        }))
    }

    pub fn post_timetable(&mut self, tt: Timetable) -> usize {
        self.post(Propagator::Timetable(tt))
    }

    pub fn num_propagators(&self) -> usize {
        self.props.len()
    }

    fn enqueue(&mut self, id: usize) {
        if !self.queued[id] {
            self.queued[id] = true;
            self.queues[self.props[id].priority()].push_back(id);
        }
    }

    /// Wakes the subscribers of every literal assigned since the last call.
    fn schedule(&mut self) {
        while self.wake_head < self.engine.trail.len() {
            let l = self.engine.trail.lits()[self.wake_head];
            self.wake_head += 1;
            let subs = match self.engine.trail.owner(l.var()) {
                Owner::Bound { var, .. } => self.int_subs.get(var.index()),
                Owner::Free => self.bool_subs.get(l.var().index()),
            };
            for &id in subs.into_iter().flatten() {
                if !self.queued[id] {
                    self.queued[id] = true;
                    self.queues[self.props[id].priority()].push_back(id);
                }
            }
        }
    }

    fn pop(&mut self) -> Option<usize> {
        let id = self.queues.iter_mut().find_map(|q| q.pop_front())?;
        self.queued[id] = false;
        Some(id)
    }

    /// Converts an explanation into a clause and adds it to the engine.
    pub fn apply(&mut self, e: &Explanation) -> Result<(), Conflict> {
        let trail = &self.engine.trail;
        debug_assert!(e.body.iter().all(|&b| trail.is_true(trail.pred_lit(b))));
        let mut lits: Vec<Lit> = e.body.iter().map(|&b| !trail.pred_lit(b)).collect();
        if let Some(h) = e.head {
            let hl = trail.pred_lit(h);
            if trail.is_true(hl) {
                return Ok(());
            }
            lits.push(hl);
        }
        if let Some(log) = &mut self.explanation_log {
            log.push(e.clause());
        }
        match self.engine.add_clause(&lits, ClauseKind::Explanation) {
            AddOutcome::Conflict(cr) => Err(Conflict::Clause(cr)),
            AddOutcome::RootConflict => Err(Conflict::Root),
            _ => Ok(()),
        }
    }

    /// Alternates unit propagation and propagators until neither changes
    /// anything.
    pub fn fixpoint(&mut self) -> Result<(), Conflict> {
        let result = self.run_queue();
        if result.is_err() {
            self.clear_queues();
        }
        result
    }

    fn run_queue(&mut self) -> Result<(), Conflict> {
        loop {
            self.engine.propagate().map_err(Conflict::Clause)?;
            self.schedule();
            let Some(id) = self.pop() else { return Ok(()) };
            let mut buf = std::mem::take(&mut self.buf);
            buf.clear();
            self.props[id].propagate(&self.engine.trail, &mut buf);
            let before = self.engine.trail.len();
            let result = buf.iter().try_for_each(|e| self.apply(e));
            self.buf = buf;
            result?;
            // Timetable steps were computed on a stale profile; rerun it.
            if self.engine.trail.len() != before && matches!(self.props[id], Propagator::Timetable(_)) {
                self.enqueue(id);
            }
        }
    }

    fn clear_queues(&mut self) {
        for q in &mut self.queues {
            for id in q.drain(..) {
                self.queued[id] = false;
            }
        }
    }

    pub fn decision_level(&self) -> u32 {
        self.engine.trail.decision_level()
    }

    pub fn decide(&mut self, l: Lit) {
        self.engine.decide(l);
    }

    pub fn backjump(&mut self, level: u32) {
        if level < self.decision_level() {
            self.engine.backjump(level).expect("lower level");
            self.wake_head = self.wake_head.min(self.engine.trail.len());
            self.clear_queues();
        }
    }

    /// Adds a clause at the current level.
    pub fn add_clause(&mut self, lits: &[Lit], kind: ClauseKind) -> Result<(), Conflict> {
        match self.engine.add_clause(lits, kind) {
            AddOutcome::Conflict(cr) => Err(Conflict::Clause(cr)),
            AddOutcome::RootConflict => Err(Conflict::Root),
            _ => Ok(()),
        }
    }

    /// Resolves a conflict: derives a 1UIP nogood, backjumps, and asserts it.
    /// Returns `None` when the conflict holds at the root. `observe` sees the
    /// nogood before and after the backjump.
    pub fn resolve(
        &mut self,
        c: Conflict,
        mut observe: impl FnMut(Stage, &Learnt, &Engine),
    ) -> Option<Learnt> {
        let Conflict::Clause(cr) = c else { return None };
        let level = self.engine.max_level(cr);
        if level == 0 {
            return None;
        }
        self.backjump(level);
        let learnt = self.engine.analyze(cr);
        observe(Stage::Analyzed, &learnt, &self.engine);
        self.backjump(learnt.backjump_level);
        observe(Stage::AfterBackjump, &learnt, &self.engine);
        self.engine.learn_and_jump(learnt.clone());
        Some(learnt)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Analyzed,
    AfterBackjump,
}
