//! Clause database, unit propagation, 1UIP conflict analysis, VSIDS, and the
//! geometric restart schedule.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::lits::{ClauseRef, IntVar, Lit, LitError, Reason, Trail};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClauseKind {
    Original,
    Explanation,
    Learned,
}

#[derive(Clone, Debug)]
pub struct Clause {
    pub lits: Vec<Lit>,
    pub kind: ClauseKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AddOutcome {
    /// A literal of the clause is true at level 0; nothing was stored.
    Satisfied,
    Stored(ClauseRef),
    /// The clause was unit and its remaining literal has been asserted.
    Unit(Lit, ClauseRef),
    /// Every literal is false under the current assignment.
    Conflict(ClauseRef),
    /// The clause is empty after removing root-false literals.
    RootConflict,
}

/// A learned nogood. `lits[0]` is the asserting literal; `lits[1]`, if any,
/// sits at `backjump_level`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Learnt {
    pub lits: Vec<Lit>,
    pub backjump_level: u32,
}

/// Geometric restarts on nodes: restart once the node count since the last
/// restart reaches the limit, then multiply the limit by the factor.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricRestart {
    limit: u64,
    factor: f64,
}

impl Default for GeometricRestart {
    fn default() -> Self {
        GeometricRestart::new(250, 2.0)
    }
}

impl GeometricRestart {
    pub fn new(limit: u64, factor: f64) -> Self {
        GeometricRestart { limit, factor }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn restart_due(&self, nodes_since_restart: u64) -> bool {
        nodes_since_restart >= self.limit
    }

    pub fn on_restart(&mut self) {
        self.limit = (self.limit as f64 * self.factor).round() as u64;
    }
}

const VSIDS_DECAY: f64 = 0.95;
const RESCALE_AT: f64 = 1e100;

/// Max-heap of literal indices ordered by activity, ties to the lower index.
#[derive(Clone, Debug, Default)]
struct LitHeap {
    heap: Vec<u32>,
    pos: Vec<Option<u32>>,
}

impl LitHeap {
    fn better(act: &[f64], a: u32, b: u32) -> bool {
        let (x, y) = (act[a as usize], act[b as usize]);
        x > y || (x == y && a < b)
    }

    fn grow(&mut self, n: usize) {
        if self.pos.len() < n {
            self.pos.resize(n, None);
        }
    }

    fn contains(&self, l: usize) -> bool {
        self.pos[l].is_some()
    }

    fn insert(&mut self, act: &[f64], l: usize) {
        if self.contains(l) {
            return;
        }
        self.pos[l] = Some(self.heap.len() as u32);
        self.heap.push(l as u32);
        self.sift_up(act, self.heap.len() - 1);
    }

    fn update(&mut self, act: &[f64], l: usize) {
        if let Some(p) = self.pos[l] {
            self.sift_up(act, p as usize);
        }
    }

    fn top(&self) -> Option<usize> {
        self.heap.first().map(|&l| l as usize)
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("non-empty");
        self.pos[top as usize] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = Some(0);
            self.sift_down(act, 0);
        }
        Some(top as usize)
    }

    fn rebuild(&mut self, act: &[f64]) {
        let items = std::mem::take(&mut self.heap);
        for &l in &items {
            self.pos[l as usize] = None;
        }
        for l in items {
            self.insert(act, l as usize);
        }
    }

    fn sift_up(&mut self, act: &[f64], mut i: usize) {
        let item = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if !Self::better(act, item, self.heap[parent]) {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.pos[self.heap[i] as usize] = Some(i as u32);
            i = parent;
        }
        self.heap[i] = item;
        self.pos[item as usize] = Some(i as u32);
    }

    fn sift_down(&mut self, act: &[f64], mut i: usize) {
        let item = self.heap[i];
        loop {
            let left = 2 * i + 1;
            if left >= self.heap.len() {
                break;
            }
            let right = left + 1;
            let child = if right < self.heap.len() && Self::better(act, self.heap[right], self.heap[left]) {
                right
            } else {
                left
            };
            if !Self::better(act, self.heap[child], item) {
                break;
            }
            self.heap[i] = self.heap[child];
            self.pos[self.heap[i] as usize] = Some(i as u32);
            i = child;
        }
        self.heap[i] = item;
        self.pos[item as usize] = Some(i as u32);
    }
}

/// The CDCL core. Owns the trail so that every assignment goes through one
/// place.
#[derive(Clone, Debug)]
pub struct Engine {
    pub trail: Trail,
    clauses: Vec<Clause>,
    watches: Vec<Vec<ClauseRef>>,
    qhead: usize,
    activity: Vec<f64>,
    bump: f64,
    heap: LitHeap,
    seen: Vec<bool>,
}

impl Default for Engine {
    fn default() -> Self {
        Self::new()
    }
}

impl Engine {
    pub fn new() -> Self {
        let mut e = Engine {
            trail: Trail::new(),
            clauses: Vec::new(),
            watches: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            bump: 1.0,
            heap: LitHeap::default(),
            seen: Vec::new(),
        };
        e.sync_vars();
        e
    }

    fn sync_vars(&mut self) {
        let nlits = 2 * self.trail.num_vars();
        let old = self.activity.len();
        self.watches.resize_with(nlits, Vec::new);
        self.activity.resize(nlits, 0.0);
        self.seen.resize(self.trail.num_vars(), false);
        self.heap.grow(nlits);
        for l in old..nlits {
            if self.trail.value(Lit::from_index(l)).is_none() {
                self.heap.insert(&self.activity, l);
            }
        }
    }

    pub fn new_bool_var(&mut self) -> Lit {
        let v = self.trail.new_bool_var();
        self.sync_vars();
        Lit::new(v, true)
    }

    pub fn new_int_var(&mut self, lo: i64, hi: i64) -> Result<IntVar, LitError> {
        let x = self.trail.new_int_var(lo, hi)?;
        self.sync_vars();
        Ok(x)
    }

    /// Perturbs initial activities so that ties break pseudo-randomly. Seed 0
    /// keeps the lowest-index tie-break.
    pub fn seed_activities(&mut self, seed: u64) {
        if seed == 0 {
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for a in &mut self.activity {
            *a += rng.gen::<f64>() * 1e-6;
        }
        self.heap.rebuild(&self.activity);
    }

    pub fn clause(&self, c: ClauseRef) -> &Clause {
        &self.clauses[c.0 as usize]
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn count_clauses(&self, kind: ClauseKind) -> usize {
        self.clauses.iter().filter(|c| c.kind == kind).count()
    }

    pub fn activity(&self, l: Lit) -> f64 {
        self.activity[l.index()]
    }

    /// Simplifies against level 0, stores the clause with watches, and
    /// asserts or reports conflict as appropriate.
    pub fn add_clause(&mut self, lits: &[Lit], kind: ClauseKind) -> AddOutcome {
        let mut lits = lits.to_vec();
        lits.sort_unstable();
        lits.dedup();
        if lits.windows(2).any(|w| w[0] == !w[1]) {
            return AddOutcome::Satisfied;
        }
        let trail = &self.trail;
        let at_root = |l: Lit| trail.value(l).is_some() && trail.level(l.var()) == 0;
        if lits.iter().any(|&l| at_root(l) && trail.is_true(l)) {
            return AddOutcome::Satisfied;
        }
        lits.retain(|&l| !(at_root(l) && trail.is_false(l)));
        if lits.is_empty() {
            return AddOutcome::RootConflict;
        }
        // True first, then unassigned, then false by decreasing level.
        lits.sort_by_key(|&l| match trail.value(l) {
            Some(true) => (0, 0),
            None => (1, 0),
            Some(false) => (2, u32::MAX - trail.level(l.var())),
        });
        let cr = self.push_clause(lits, kind);
        let c = &self.clauses[cr.0 as usize].lits;
        let first = c[0];
        match self.trail.value(first) {
            Some(false) => AddOutcome::Conflict(cr),
            Some(true) => AddOutcome::Stored(cr),
            None if c.len() == 1 || self.trail.is_false(c[1]) => {
                self.trail
                    .assert_literal(first, Reason::Clause(cr))
                    .expect("unassigned literal");
                AddOutcome::Unit(first, cr)
            }
            None => AddOutcome::Stored(cr),
        }
    }

    fn push_clause(&mut self, lits: Vec<Lit>, kind: ClauseKind) -> ClauseRef {
        let cr = ClauseRef(self.clauses.len() as u32);
        if lits.len() >= 2 {
            self.watches[lits[0].index()].push(cr);
            self.watches[lits[1].index()].push(cr);
        }
        self.clauses.push(Clause { lits, kind });
        cr
    }

    /// Exhausts unit propagation. Returns the falsified clause on conflict.
    pub fn propagate(&mut self) -> Result<(), ClauseRef> {
        while self.qhead < self.trail.len() {
            let p = self.trail.lits()[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.index()]);
            let (mut i, mut j) = (0, 0);
            let mut conflict = None;
            while i < ws.len() {
                let cr = ws[i];
                i += 1;
                let c = &mut self.clauses[cr.0 as usize].lits;
                if c[0] == false_lit {
                    c.swap(0, 1);
                }
                debug_assert_eq!(c[1], false_lit);
                if self.trail.is_true(c[0]) {
                    ws[j] = cr;
                    j += 1;
                    continue;
                }
                if let Some(k) = (2..c.len()).find(|&k| !self.trail.is_false(c[k])) {
                    c.swap(1, k);
                    self.watches[c[1].index()].push(cr);
                    continue;
                }
                ws[j] = cr;
                j += 1;
                let first = c[0];
                if self.trail.is_false(first) {
                    conflict = Some(cr);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        i += 1;
                        j += 1;
                    }
                } else {
                    self.trail
                        .assert_literal(first, Reason::Clause(cr))
                        .expect("unassigned literal");
                }
            }
            ws.truncate(j);
            let added = std::mem::replace(&mut self.watches[false_lit.index()], ws);
            self.watches[false_lit.index()].extend(added);
            if let Some(cr) = conflict {
                self.qhead = self.trail.len();
                return Err(cr);
            }
        }
        Ok(())
    }

    /// Opens a decision level and asserts `l`.
    pub fn decide(&mut self, l: Lit) {
        self.trail.decide(l).expect("decision on an unassigned literal");
    }

    pub fn backjump(&mut self, level: u32) -> Result<(), LitError> {
        let (heap, act) = (&mut self.heap, &self.activity);
        self.trail.backjump_with(level, |l| {
            heap.insert(act, l.index());
            heap.insert(act, (!l).index());
        })?;
        self.qhead = self.qhead.min(self.trail.len());
        Ok(())
    }

    /// Highest decision level among the literals of `c`.
    pub fn max_level(&self, c: ClauseRef) -> u32 {
        self.clause(c)
            .lits
            .iter()
            .map(|l| self.trail.level(l.var()))
            .max()
            .unwrap_or(0)
    }

    /// The false literals of the reason clause of `p`, excluding `p` itself.
    fn antecedents(&self, p: Lit, out: &mut Vec<Lit>) {
        out.clear();
        match self.trail.reason(p.var()) {
            Reason::Decision => {}
            Reason::Implied(src) => out.push(!src),
            Reason::Clause(cr) => {
                out.extend(self.clause(cr).lits.iter().copied().filter(|&l| l != p))
            }
        }
    }

    /// 1UIP analysis of a clause that is false at the current decision level.
    pub fn analyze(&mut self, conflict: ClauseRef) -> Learnt {
        let current = self.trail.decision_level();
        debug_assert!(current > 0);
        debug_assert_eq!(self.max_level(conflict), current);
        let mut learnt = vec![Lit::FALSE];
        let mut pending = 0usize;
        let mut reason: Vec<Lit> = self.clause(conflict).lits.clone();
        let mut idx = self.trail.len();
        let mut touched = Vec::new();
        let uip = loop {
            for &q in &reason {
                let v = q.var();
                if self.seen[v.index()] || self.trail.level(v) == 0 {
                    continue;
                }
                self.seen[v.index()] = true;
                touched.push(v);
                if self.trail.level(v) == current {
                    pending += 1;
                } else {
                    learnt.push(q);
                }
            }
            let p = loop {
                idx -= 1;
                let p = self.trail.lits()[idx];
                if self.seen[p.var().index()] {
                    break p;
                }
            };
            pending -= 1;
            if pending == 0 {
                break p;
            }
            let mut buf = std::mem::take(&mut reason);
            self.antecedents(p, &mut buf);
            reason = buf;
        };
        for v in touched {
            self.seen[v.index()] = false;
        }
        learnt[0] = !uip;
        let mut backjump_level = 0;
        if learnt.len() > 1 {
            let (best, lvl) = (1..learnt.len())
                .map(|i| (i, self.trail.level(learnt[i].var())))
                .max_by_key(|&(i, lvl)| (lvl, std::cmp::Reverse(i)))
                .expect("non-empty tail");
            learnt.swap(1, best);
            backjump_level = lvl;
        }
        Learnt { lits: learnt, backjump_level }
    }

    /// Backjumps, stores the nogood, and asserts its first literal. Bumps the
    /// nogood's literals and decays all others.
    pub fn learn_and_jump(&mut self, learnt: Learnt) -> Lit {
        if self.trail.decision_level() > learnt.backjump_level {
            self.backjump(learnt.backjump_level).expect("lower level");
        }
        for &l in &learnt.lits {
            self.bump_literal(l);
        }
        self.decay();
        let asserting = learnt.lits[0];
        let cr = self.push_clause(learnt.lits, ClauseKind::Learned);
        self.trail
            .assert_literal(asserting, Reason::Clause(cr))
            .expect("learned clause is asserting after backjump");
        asserting
    }

    fn bump_literal(&mut self, l: Lit) {
        let i = l.index();
        self.activity[i] += self.bump;
        if self.activity[i] > RESCALE_AT {
            for a in &mut self.activity {
                *a /= RESCALE_AT;
            }
            self.bump /= RESCALE_AT;
        }
        self.heap.update(&self.activity, i);
    }

    fn decay(&mut self) {
        self.bump /= VSIDS_DECAY;
    }

    /// The unassigned literal with the highest activity.
    pub fn pick_vsids_literal(&mut self) -> Option<Lit> {
        while let Some(top) = self.heap.top() {
            let l = Lit::from_index(top);
            if self.trail.value(l).is_none() {
                return Some(l);
            }
            self.heap.pop(&self.activity);
        }
        None
    }

    /// Returns to level 0, keeping clauses and activities.
    pub fn restart(&mut self) {
        if self.trail.decision_level() > 0 {
            self.backjump(0).expect("positive level");
        }
    }
}
