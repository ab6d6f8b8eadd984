//! Boolean encoding of integer variables and the assignment trail.
//!
//! Every integer variable with initial domain `[lo, hi]` owns the bounds
//! literals `[x <= d]` for `d` in `[lo, hi - 1]`; `[d <= x]` is the negation of
//! `[x <= d - 1]`. Equality literals are not materialized. Bounds literals
//! outside the initial range map onto the constant literals [`Lit::TRUE`] and
//! [`Lit::FALSE`].
//!
//! The chain clauses `[x <= d] -> [x <= d + 1]` are never stored. Asserting a
//! bounds literal immediately asserts every literal it implies along the chain,
//! each with reason [`Reason::Implied`] pointing at the asserted literal, which
//! is exactly the binary resolvent of the chain clauses in between.

use std::fmt;
use std::ops::Not;

use thiserror::Error;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoolVar(pub u32);

impl BoolVar {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A literal: variable index shifted left, low bit set for negation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub const TRUE: Lit = Lit(0);
    pub const FALSE: Lit = Lit(1);

    pub fn new(var: BoolVar, positive: bool) -> Lit {
        Lit(var.0 << 1 | u32::from(!positive))
    }

    pub fn var(self) -> BoolVar {
        BoolVar(self.0 >> 1)
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    /// Dense index, usable for per-literal tables.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(index: usize) -> Lit {
        Lit(index as u32)
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.is_positive() { "" } else { "-" };
        write!(f, "{sign}b{}", self.var().0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntVar(pub u32);

impl IntVar {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// An atomic constraint on the integer level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pred {
    /// `[x <= v]`
    Le(IntVar, i64),
    /// `[v <= x]`
    Ge(IntVar, i64),
    /// A plain Boolean literal.
    Bool(Lit),
}

impl Not for Pred {
    type Output = Pred;
    fn not(self) -> Pred {
        match self {
            Pred::Le(x, v) => Pred::Ge(x, v + 1),
            Pred::Ge(x, v) => Pred::Le(x, v - 1),
            Pred::Bool(l) => Pred::Bool(!l),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ClauseRef(pub u32);

/// Why a literal is on the trail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reason {
    Decision,
    /// Unit propagation on a stored clause.
    Clause(ClauseRef),
    /// Implied along the bounds chain by the given (true) literal.
    Implied(Lit),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Owner {
    /// Constant or plain Boolean variable.
    Free,
    /// The literal `[var <= value]` (positive polarity).
    Bound { var: IntVar, value: i64 },
}

#[derive(Clone, Copy, Debug)]
struct Encoding {
    lo: i64,
    hi: i64,
    first: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LitError {
    #[error("empty initial domain [{lo}, {hi}]")]
    EmptyDomain { lo: i64, hi: i64 },
    #[error("cannot backjump to level {target} from level {current}")]
    BadBackjump { target: u32, current: u32 },
}

/// The literal being asserted is already false.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Contradiction(pub Lit);

/// Read access to integer bounds, used by propagators.
pub trait DomainView {
    fn lb(&self, x: IntVar) -> i64;
    fn ub(&self, x: IntVar) -> i64;
    /// Bounds fixed at decision level 0. Defaults to "unknown", which makes no
    /// literal trivially true.
    fn root_lb(&self, _x: IntVar) -> i64 {
        i64::MIN
    }
    fn root_ub(&self, _x: IntVar) -> i64 {
        i64::MAX
    }
    fn lit_value(&self, l: Lit) -> Option<bool>;

    fn is_fixed(&self, x: IntVar) -> bool {
        self.lb(x) == self.ub(x)
    }

    /// True when `p` holds in every state reachable from the root.
    fn root_entails(&self, p: Pred) -> bool {
        match p {
            Pred::Le(x, v) => self.root_ub(x) <= v,
            Pred::Ge(x, v) => self.root_lb(x) >= v,
            Pred::Bool(l) => l == Lit::TRUE,
        }
    }
}

/// Assignment stack with decision levels, reasons, and integer bounds.
#[derive(Clone, Debug)]
pub struct Trail {
    values: Vec<i8>,
    levels: Vec<u32>,
    reasons: Vec<Reason>,
    owners: Vec<Owner>,
    encodings: Vec<Encoding>,
    lb: Vec<i64>,
    ub: Vec<i64>,
    root_lb: Vec<i64>,
    root_ub: Vec<i64>,
    stack: Vec<Lit>,
    level_marks: Vec<usize>,
    bound_undo: Vec<(IntVar, i64, i64)>,
    bound_marks: Vec<usize>,
}

impl Default for Trail {
    fn default() -> Self {
        Self::new()
    }
}

impl Trail {
    pub fn new() -> Self {
        let mut t = Trail {
            values: Vec::new(),
            levels: Vec::new(),
            reasons: Vec::new(),
            owners: Vec::new(),
            encodings: Vec::new(),
            lb: Vec::new(),
            ub: Vec::new(),
            root_lb: Vec::new(),
            root_ub: Vec::new(),
            stack: Vec::new(),
            level_marks: Vec::new(),
            bound_undo: Vec::new(),
            bound_marks: Vec::new(),
        };
        let v = t.new_bool_var();
        debug_assert_eq!(Lit::new(v, true), Lit::TRUE);
        t.assert_literal(Lit::TRUE, Reason::Decision).expect("fresh constant");
        t
    }

    pub fn new_bool_var(&mut self) -> BoolVar {
        self.push_var(Owner::Free)
    }

    fn push_var(&mut self, owner: Owner) -> BoolVar {
        let v = BoolVar(self.values.len() as u32);
        self.values.push(0);
        self.levels.push(0);
        self.reasons.push(Reason::Decision);
        self.owners.push(owner);
        v
    }

    /// Allocates `hi - lo` bounds literals. Must be called at level 0.
    pub fn new_int_var(&mut self, lo: i64, hi: i64) -> Result<IntVar, LitError> {
        if lo > hi {
            return Err(LitError::EmptyDomain { lo, hi });
        }
        debug_assert_eq!(self.decision_level(), 0);
        let var = IntVar(self.encodings.len() as u32);
        let first = self.values.len() as u32;
        for value in lo..hi {
            self.push_var(Owner::Bound { var, value });
        }
        self.encodings.push(Encoding { lo, hi, first });
        self.lb.push(lo);
        self.ub.push(hi);
        self.root_lb.push(lo);
        self.root_ub.push(hi);
        Ok(var)
    }

    pub fn num_vars(&self) -> usize {
        self.values.len()
    }

    pub fn num_int_vars(&self) -> usize {
        self.encodings.len()
    }

    pub fn initial_domain(&self, x: IntVar) -> (i64, i64) {
        let e = self.encodings[x.index()];
        (e.lo, e.hi)
    }

    /// The literal `[x <= d]`.
    pub fn le(&self, x: IntVar, d: i64) -> Lit {
        let e = self.encodings[x.index()];
        if d >= e.hi {
            Lit::TRUE
        } else if d < e.lo {
            Lit::FALSE
        } else {
            Lit::new(BoolVar(e.first + (d - e.lo) as u32), true)
        }
    }

    /// The literal `[d <= x]`.
    pub fn ge(&self, x: IntVar, d: i64) -> Lit {
        !self.le(x, d - 1)
    }

    pub fn pred_lit(&self, p: Pred) -> Lit {
        match p {
            Pred::Le(x, v) => self.le(x, v),
            Pred::Ge(x, v) => self.ge(x, v),
            Pred::Bool(l) => l,
        }
    }

    /// The integer meaning of a literal, when it is a bounds literal.
    pub fn lit_pred(&self, l: Lit) -> Pred {
        match self.owners[l.var().index()] {
            Owner::Bound { var, value } if l.is_positive() => Pred::Le(var, value),
            Owner::Bound { var, value } => Pred::Ge(var, value + 1),
            Owner::Free => Pred::Bool(l),
        }
    }

    pub fn owner(&self, v: BoolVar) -> Owner {
        self.owners[v.index()]
    }

    pub fn value(&self, l: Lit) -> Option<bool> {
        match self.values[l.var().index()] {
            0 => None,
            v => Some((v > 0) == l.is_positive()),
        }
    }

    pub fn is_true(&self, l: Lit) -> bool {
        self.value(l) == Some(true)
    }

    pub fn is_false(&self, l: Lit) -> bool {
        self.value(l) == Some(false)
    }

    pub fn level(&self, v: BoolVar) -> u32 {
        self.levels[v.index()]
    }

    pub fn reason(&self, v: BoolVar) -> Reason {
        self.reasons[v.index()]
    }

    pub fn decision_level(&self) -> u32 {
        self.level_marks.len() as u32
    }

    pub fn len(&self) -> usize {
        self.stack.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stack.is_empty()
    }

    /// Trail length at the start of `level` (level 0 starts at 0).
    pub fn level_start(&self, level: u32) -> usize {
        if level == 0 {
            0
        } else {
            self.level_marks[level as usize - 1]
        }
    }

    pub fn lits(&self) -> &[Lit] {
        &self.stack
    }

    pub fn domain_of(&self, x: IntVar) -> (i64, i64) {
        (self.lb[x.index()], self.ub[x.index()])
    }

    /// Opens a new decision level.
    pub fn new_level(&mut self) {
        self.level_marks.push(self.stack.len());
        self.bound_marks.push(self.bound_undo.len());
    }

    /// Opens a level and asserts `l` as its decision.
    pub fn decide(&mut self, l: Lit) -> Result<(), Contradiction> {
        debug_assert!(self.value(l).is_none());
        self.new_level();
        self.assert_literal(l, Reason::Decision).map(|_| ())
    }

    /// Pushes `l` at the current level. Returns `Ok(false)` when `l` is
    /// already true and `Err` when it is already false.
    pub fn assert_literal(&mut self, l: Lit, reason: Reason) -> Result<bool, Contradiction> {
        match self.value(l) {
            Some(true) => return Ok(false),
            Some(false) => return Err(Contradiction(l)),
            None => {}
        }
        self.push(l, reason);
        if let Owner::Bound { var, value } = self.owners[l.var().index()] {
            let x = var.index();
            let (lb, ub) = (self.lb[x], self.ub[x]);
            self.bound_undo.push((var, lb, ub));
            if l.is_positive() {
                // [x <= value] implies [x <= d] for value < d < ub.
                for d in value + 1..ub {
                    let implied = self.le(var, d);
                    debug_assert!(self.value(implied).is_none());
                    self.push(implied, Reason::Implied(l));
                }
                self.ub[x] = value;
            } else {
                // [value + 1 <= x] implies [d + 1 <= x] for lb <= d < value.
                for d in (lb..value).rev() {
                    let implied = !self.le(var, d);
                    debug_assert!(self.value(implied).is_none());
                    self.push(implied, Reason::Implied(l));
                }
                self.lb[x] = value + 1;
            }
            if self.level_marks.is_empty() {
                self.root_lb[x] = self.lb[x];
                self.root_ub[x] = self.ub[x];
            }
        }
        Ok(true)
    }

    fn push(&mut self, l: Lit, reason: Reason) {
        let v = l.var().index();
        self.values[v] = if l.is_positive() { 1 } else { -1 };
        self.levels[v] = self.decision_level();
        self.reasons[v] = reason;
        self.stack.push(l);
    }

    /// Pops every level above `level`, restoring bounds. Calls `on_unassign`
    /// for every removed literal.
    pub fn backjump_with(
        &mut self,
        level: u32,
        mut on_unassign: impl FnMut(Lit),
    ) -> Result<(), LitError> {
        let current = self.decision_level();
        if level >= current {
            return Err(LitError::BadBackjump { target: level, current });
        }
        let keep = self.level_marks[level as usize];
        for l in self.stack.drain(keep..).rev() {
            self.values[l.var().index()] = 0;
            on_unassign(l);
        }
        let keep_bounds = self.bound_marks[level as usize];
        for (x, lb, ub) in self.bound_undo.drain(keep_bounds..).rev() {
            self.lb[x.index()] = lb;
            self.ub[x.index()] = ub;
        }
        self.level_marks.truncate(level as usize);
        self.bound_marks.truncate(level as usize);
        Ok(())
    }

    pub fn backjump(&mut self, level: u32) -> Result<(), LitError> {
        self.backjump_with(level, |_| {})
    }

    /// Checks the chain property and bound consistency for every variable.
    pub fn check_chains(&self) -> bool {
        (0..self.encodings.len()).all(|x| {
            let var = IntVar(x as u32);
            let e = self.encodings[x];
            let (lb, ub) = (self.lb[x], self.ub[x]);
            lb <= ub
                && (e.lo..e.hi).all(|d| {
                    let v = self.value(self.le(var, d));
                    let expect = if d >= ub {
                        Some(true)
                    } else if d < lb {
                        Some(false)
                    } else {
                        None
                    };
                    v == expect
                })
        })
    }
}

impl DomainView for Trail {
    fn lb(&self, x: IntVar) -> i64 {
        self.lb[x.index()]
    }
    fn ub(&self, x: IntVar) -> i64 {
        self.ub[x.index()]
    }
    fn root_lb(&self, x: IntVar) -> i64 {
        self.root_lb[x.index()]
    }
    fn root_ub(&self, x: IntVar) -> i64 {
        self.root_ub[x.index()]
    }
    fn lit_value(&self, l: Lit) -> Option<bool> {
        self.value(l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn allocation() {
        let mut t = Trail::new();
        let before = t.num_vars();
        let x = t.new_int_var(0, 15).unwrap();
        assert_eq!(t.num_vars() - before, 15);
        assert_eq!(t.domain_of(x), (0, 15));
        let before = t.num_vars();
        let y = t.new_int_var(3, 3).unwrap();
        assert_eq!(t.num_vars(), before);
        assert_eq!(t.domain_of(y), (3, 3));
        assert_eq!(t.le(y, 3), Lit::TRUE);
        assert_eq!(t.ge(y, 3), Lit::TRUE);
        assert_eq!(t.new_int_var(5, 4), Err(LitError::EmptyDomain { lo: 5, hi: 4 }));
    }

    #[test]
    fn domain_projection() {
        let mut t = Trail::new();
        let a = t.new_int_var(0, 15).unwrap();
        t.new_level();
        t.assert_literal(t.ge(a, 2), Reason::Decision).unwrap();
        t.assert_literal(t.le(a, 6), Reason::Decision).unwrap();
        assert_eq!(t.domain_of(a), (2, 6));
        assert!(t.check_chains());
        assert!(t.is_true(t.le(a, 9)));
        assert!(t.is_false(t.le(a, 0)));
        assert_eq!(t.reason(t.le(a, 9).var()), Reason::Implied(t.le(a, 6)));
    }

    #[test]
    fn contradiction_is_reported() {
        let mut t = Trail::new();
        let x = t.new_int_var(0, 10).unwrap();
        t.new_level();
        t.assert_literal(t.le(x, 3), Reason::Decision).unwrap();
        let l = !t.le(x, 3);
        assert_eq!(t.assert_literal(l, Reason::Decision), Err(Contradiction(l)));
        // wipe-out through the chain: x >= 5 contradicts x <= 3
        let l = t.ge(x, 5);
        assert_eq!(t.assert_literal(l, Reason::Decision), Err(Contradiction(l)));
        assert_eq!(t.domain_of(x), (0, 3));
    }

    #[test]
    fn backjump_restores() {
        let mut t = Trail::new();
        let a = t.new_int_var(0, 8).unwrap();
        let root_len = t.len();
        t.decide(t.le(a, 0)).unwrap();
        assert_eq!(t.domain_of(a), (0, 0));
        assert_eq!(t.level(t.le(a, 0).var()), 1);
        t.backjump(0).unwrap();
        assert_eq!(t.len(), root_len);
        assert_eq!(t.domain_of(a), (0, 8));
        assert!(t.check_chains());
        assert_eq!(t.backjump(0), Err(LitError::BadBackjump { target: 0, current: 0 }));
    }

    #[test]
    fn root_bounds_follow_level_zero() {
        let mut t = Trail::new();
        let a = t.new_int_var(0, 8).unwrap();
        t.assert_literal(t.ge(a, 2), Reason::Decision).unwrap();
        t.decide(t.le(a, 5)).unwrap();
        assert_eq!((t.root_lb(a), t.root_ub(a)), (2, 8));
        assert!(t.root_entails(Pred::Ge(a, 1)));
        assert!(!t.root_entails(Pred::Le(a, 5)));
    }

    #[test]
    fn pred_roundtrip() {
        let mut t = Trail::new();
        let a = t.new_int_var(-3, 4).unwrap();
        for d in -3..4 {
            assert_eq!(t.lit_pred(t.le(a, d)), Pred::Le(a, d));
            assert_eq!(t.lit_pred(!t.le(a, d)), Pred::Ge(a, d + 1));
            assert_eq!(!Pred::Le(a, d), Pred::Ge(a, d + 1));
        }
    }

    proptest! {
        #[test]
        fn chains_hold_and_replay_is_deterministic(
            ops in proptest::collection::vec((0usize..3, -1i64..12, any::<bool>()), 1..40)
        ) {
            let mut t = Trail::new();
            let xs: Vec<IntVar> = (0..3).map(|_| t.new_int_var(0, 10).unwrap()).collect();
            let mut snapshots = Vec::new();
            for &(v, d, upper) in &ops {
                let l = if upper { t.le(xs[v], d) } else { t.ge(xs[v], d) };
                if t.value(l).is_some() { continue; }
                t.decide(l).unwrap();
                prop_assert!(t.check_chains());
                snapshots.push(xs.iter().map(|&x| t.domain_of(x)).collect::<Vec<_>>());
            }
            let decisions: Vec<Lit> = (1..=t.decision_level())
                .map(|lvl| t.lits()[t.level_start(lvl)])
                .collect();
            if t.decision_level() > 0 {
                t.backjump(0).unwrap();
            }
            for (i, &l) in decisions.iter().enumerate() {
                t.decide(l).unwrap();
                let now: Vec<_> = xs.iter().map(|&x| t.domain_of(x)).collect();
                prop_assert_eq!(&now, &snapshots[i]);
            }
        }
    }
}
