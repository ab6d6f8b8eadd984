//! Explaining propagators.
//!
//! A propagator reads bounds through a [`DomainView`] and reports each
//! inference as an [`Explanation`] `body -> head`. A missing head denotes
//! failure. Propagators keep no state between calls.

mod timetable;

pub use timetable::{Push, Segment, Task, Timetable};

use crate::lits::{DomainView, IntVar, Lit, Pred};

/// `body -> head`, or `body -> false` when `head` is `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Explanation {
    pub body: Vec<Pred>,
    pub head: Option<Pred>,
}

impl Explanation {
    pub fn implies(body: Vec<Pred>, head: Pred) -> Self {
        Explanation { body, head: Some(head) }
    }

    pub fn failure(body: Vec<Pred>) -> Self {
        Explanation { body, head: None }
    }

    /// The clause form: negated body literals followed by the head.
    pub fn clause(&self) -> Vec<Pred> {
        self.body.iter().map(|&p| !p).chain(self.head).collect()
    }
}

/// `S[from] + lag <= S[to]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrecedenceProp {
    pub from: IntVar,
    pub to: IntVar,
    pub lag: i64,
}

/// `control -> S[from] + lag <= S[to]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReifiedPrecProp {
    pub control: Lit,
    pub prec: PrecedenceProp,
}

/// Bounds propagation of a precedence. `guard` literals are added to every
/// body (used by the reified form).
fn precedence_bounds(p: &PrecedenceProp, guard: Option<Lit>, d: &impl DomainView, out: &mut Vec<Explanation>) {
    let guard = guard.map(Pred::Bool);
    let lb_from = d.lb(p.from);
    if lb_from + p.lag > d.lb(p.to) {
        let body = guard.into_iter().chain([Pred::Ge(p.from, lb_from)]).collect();
        out.push(Explanation::implies(body, Pred::Ge(p.to, lb_from + p.lag)));
    }
    let ub_to = d.ub(p.to);
    if ub_to - p.lag < d.ub(p.from) {
        let body = guard.into_iter().chain([Pred::Le(p.to, ub_to)]).collect();
        out.push(Explanation::implies(body, Pred::Le(p.from, ub_to - p.lag)));
    }
}

pub fn prop_precedence(p: &PrecedenceProp, d: &impl DomainView, out: &mut Vec<Explanation>) {
    precedence_bounds(p, None, d, out);
}

/// If the control literal is true the precedence is enforced; if the
/// precedence can no longer hold the control literal is set false. The
/// control literal is never forced true.
pub fn prop_reified(rp: &ReifiedPrecProp, d: &impl DomainView, out: &mut Vec<Explanation>) {
    let p = &rp.prec;
    match d.lit_value(rp.control) {
        Some(true) => precedence_bounds(p, Some(rp.control), d, out),
        Some(false) => {}
        None => {
            let (lb_from, ub_to) = (d.lb(p.from), d.ub(p.to));
            if lb_from + p.lag > ub_to {
                out.push(Explanation::implies(
                    vec![Pred::Ge(p.from, lb_from), Pred::Le(p.to, ub_to)],
                    Pred::Bool(!rp.control),
                ));
            }
        }
    }
}

/// Any propagator the solver can host. Lower priority values run first.
#[derive(Clone, Debug)]
pub enum Propagator {
    Precedence(PrecedenceProp),
    Reified(ReifiedPrecProp),
    Timetable(Timetable),
}

impl Propagator {
    pub const PRIORITIES: usize = 3;

    pub fn priority(&self) -> usize {
        match self {
            Propagator::Precedence(_) => 0,
            Propagator::Reified(_) => 1,
            Propagator::Timetable(_) => 2,
        }
    }

    pub fn int_vars(&self) -> Vec<IntVar> {
        match self {
            Propagator::Precedence(p) => vec![p.from, p.to],
            Propagator::Reified(r) => vec![r.prec.from, r.prec.to],
            Propagator::Timetable(t) => t.tasks.iter().map(|t| t.start).collect(),
        }
    }

    pub fn control(&self) -> Option<Lit> {
        match self {
            Propagator::Reified(r) => Some(r.control),
            _ => None,
        }
    }

    pub fn propagate(&self, d: &impl DomainView, out: &mut Vec<Explanation>) {
        match self {
            Propagator::Precedence(p) => prop_precedence(p, d, out),
            Propagator::Reified(r) => prop_reified(r, d, out),
            Propagator::Timetable(t) => t.propagate(d, out),
        }
    }
}

/// Plain bounds for unit tests and demos.
#[derive(Clone, Debug, Default)]
pub struct Bounds {
    pub lb: Vec<i64>,
    pub ub: Vec<i64>,
    pub root_lb: Vec<i64>,
    pub root_ub: Vec<i64>,
    pub bools: Vec<(Lit, bool)>,
}

impl Bounds {
    /// Current domains; the root is taken to be the same as the current state.
    pub fn new(domains: &[(i64, i64)]) -> Self {
        let lb: Vec<i64> = domains.iter().map(|d| d.0).collect();
        let ub: Vec<i64> = domains.iter().map(|d| d.1).collect();
        Bounds { root_lb: lb.clone(), root_ub: ub.clone(), lb, ub, bools: Vec::new() }
    }

    pub fn with_root(mut self, root: &[(i64, i64)]) -> Self {
        self.root_lb = root.iter().map(|d| d.0).collect();
        self.root_ub = root.iter().map(|d| d.1).collect();
        self
    }

    pub fn with_bool(mut self, l: Lit, value: bool) -> Self {
        self.bools.push((l, value));
        self
    }
}

impl DomainView for Bounds {
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
        self.bools.iter().find_map(|&(b, v)| {
            if b == l {
                Some(v)
            } else if b == !l {
                Some(!v)
            } else {
                None
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lits::BoolVar;

    fn v(i: u32) -> IntVar {
        IntVar(i)
    }

    #[test]
    fn precedence_example_explanations() {
        let (a, b) = (v(0), v(1));
        let d = Bounds::new(&[(0, 15), (0, 15)]);
        let mut out = Vec::new();
        prop_precedence(&PrecedenceProp { from: a, to: b, lag: 2 }, &d, &mut out);
        assert_eq!(out.len(), 2);
        // [s_a >= 0] -> [s_b >= 2], i.e. [s_a <= -1] or not [s_b <= 1]
        assert_eq!(out[0].clause(), vec![Pred::Le(a, -1), Pred::Ge(b, 2)]);
        // [s_b <= 15] -> [s_a <= 13]
        assert_eq!(out[1].clause(), vec![Pred::Ge(b, 16), Pred::Le(a, 13)]);
    }

    #[test]
    fn precedence_no_change_and_crossing() {
        let mut out = Vec::new();
        let d = Bounds::new(&[(0, 5), (0, 5)]);
        prop_precedence(&PrecedenceProp { from: v(0), to: v(1), lag: 0 }, &d, &mut out);
        assert!(out.is_empty());
        let d = Bounds::new(&[(5, 5), (0, 7)]);
        prop_precedence(&PrecedenceProp { from: v(0), to: v(1), lag: 3 }, &d, &mut out);
        // S_j >= 8 while max(S_j) = 7: the head is outside the window.
        assert_eq!(out[0], Explanation::implies(vec![Pred::Ge(v(0), 5)], Pred::Ge(v(1), 8)));
    }

    #[test]
    fn reified_detects_impossible_side() {
        let b = Lit::new(BoolVar(1), true);
        // a before b with p_a = 2 while S_a = 3 and S_b = 0
        let rp = ReifiedPrecProp { control: b, prec: PrecedenceProp { from: v(0), to: v(1), lag: 2 } };
        let d = Bounds::new(&[(3, 3), (0, 0)]);
        let mut out = Vec::new();
        prop_reified(&rp, &d, &mut out);
        assert_eq!(
            out,
            vec![Explanation::implies(vec![Pred::Ge(v(0), 3), Pred::Le(v(1), 0)], Pred::Bool(!b))]
        );
    }

    #[test]
    fn reified_acts_when_control_true() {
        let b = Lit::new(BoolVar(1), true);
        let rp = ReifiedPrecProp { control: b, prec: PrecedenceProp { from: v(0), to: v(1), lag: 2 } };
        let d = Bounds::new(&[(0, 5), (0, 15)]).with_bool(b, true);
        let mut out = Vec::new();
        prop_reified(&rp, &d, &mut out);
        assert_eq!(
            out,
            vec![Explanation::implies(vec![Pred::Bool(b), Pred::Ge(v(0), 0)], Pred::Ge(v(1), 2))]
        );
        let mut out = Vec::new();
        prop_reified(&rp, &Bounds::new(&[(0, 5), (0, 15)]).with_bool(b, false), &mut out);
        assert!(out.is_empty());
        // Unknown control with a satisfiable guarded precedence: nothing.
        prop_reified(&rp, &Bounds::new(&[(0, 5), (0, 15)]), &mut out);
        assert!(out.is_empty());
    }

    #[test]
    fn reified_both_sides_impossible() {
        // S_a = 2, S_b = 2, p = (2, 5): neither order fits.
        let b = Lit::new(BoolVar(1), true);
        let ab = ReifiedPrecProp { control: b, prec: PrecedenceProp { from: v(0), to: v(1), lag: 2 } };
        let ba = ReifiedPrecProp { control: !b, prec: PrecedenceProp { from: v(1), to: v(0), lag: 5 } };
        let d = Bounds::new(&[(2, 2), (2, 2)]);
        let mut out = Vec::new();
        prop_reified(&ab, &d, &mut out);
        prop_reified(&ba, &d, &mut out);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].head, Some(Pred::Bool(!b)));
        assert_eq!(out[1].head, Some(Pred::Bool(b)));
        let lits: Vec<Pred> = out.iter().flat_map(|e| e.body.clone()).collect();
        assert_eq!(
            lits,
            vec![Pred::Ge(v(0), 2), Pred::Le(v(1), 2), Pred::Ge(v(1), 2), Pred::Le(v(0), 2)]
        );
    }
}
