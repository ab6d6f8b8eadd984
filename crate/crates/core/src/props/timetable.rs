//! Timetable propagation of a cumulative resource.
//!
//! The compulsory part of a task with start window `[lb, ub]` and duration `p`
//! is `[ub, lb + p - 1]` when non-empty. The profile sums the demand of all
//! compulsory parts. Lower bounds are pushed in ascending time order and upper
//! bounds in descending order, one pointwise explanation per step.

use crate::lits::{DomainView, IntVar, Pred};

use super::Explanation;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Task {
    pub start: IntVar,
    pub duration: i64,
    pub demand: i64,
}

/// A maximal time range `[start, end]` covered by a fixed set of compulsory
/// parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub start: i64,
    pub end: i64,
    pub height: i64,
    /// Indices into [`Timetable::tasks`].
    pub tasks: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Push {
    /// Raise the earliest start past `t`.
    Lower,
    /// Lower the latest start so the task ends by `t`.
    Upper,
}

#[derive(Clone, Debug)]
pub struct Timetable {
    pub capacity: i64,
    pub tasks: Vec<Task>,
}

impl Timetable {
    /// Tasks with zero duration or zero demand never interact with the
    /// resource and are dropped.
    pub fn new(capacity: i64, tasks: impl IntoIterator<Item = Task>) -> Self {
        let tasks = tasks.into_iter().filter(|t| t.duration > 0 && t.demand > 0).collect();
        Timetable { capacity, tasks }
    }

    pub fn compulsory_part(&self, task: usize, d: &impl DomainView) -> Option<(i64, i64)> {
        let t = &self.tasks[task];
        let (lb, ub) = (d.lb(t.start), d.ub(t.start));
        (ub < lb + t.duration).then_some((ub, lb + t.duration - 1))
    }

    /// The resource profile as disjoint segments of positive height, in time
    /// order.
    pub fn profile(&self, d: &impl DomainView) -> Vec<Segment> {
        let parts: Vec<(usize, i64, i64)> = (0..self.tasks.len())
            .filter_map(|i| self.compulsory_part(i, d).map(|(s, e)| (i, s, e)))
            .collect();
        let mut cuts: Vec<i64> = parts.iter().flat_map(|&(_, s, e)| [s, e + 1]).collect();
        cuts.sort_unstable();
        cuts.dedup();
        let mut segs: Vec<Segment> = Vec::new();
        for w in cuts.windows(2) {
            let (start, end) = (w[0], w[1] - 1);
            let tasks: Vec<usize> = parts
                .iter()
                .filter(|&&(_, s, e)| s <= start && start <= e)
                .map(|&(i, _, _)| i)
                .collect();
            if tasks.is_empty() {
                continue;
            }
            let height = tasks.iter().map(|&i| self.tasks[i].demand).sum();
            segs.push(Segment { start, end, height, tasks });
        }
        segs
    }

    /// Body literals forcing task `j` to run at time `t`:
    /// `[t - p_j + 1 <= S_j]` and `[S_j <= t]`. Literals true at the root are
    /// left out.
    fn cover_literals(&self, j: usize, t: i64, d: &impl DomainView, out: &mut Vec<Pred>) {
        let task = &self.tasks[j];
        for p in [Pred::Ge(task.start, t - task.duration + 1), Pred::Le(task.start, t)] {
            if !d.root_entails(p) {
                out.push(p);
            }
        }
    }

    /// Explains why `pushed` cannot overlap time `t` given that every task in
    /// `contributors` must run at `t`.
    pub fn pointwise_explanation(
        &self,
        pushed: usize,
        t: i64,
        contributors: &[usize],
        dir: Push,
        d: &impl DomainView,
    ) -> Explanation {
        debug_assert!(
            contributors.iter().map(|&j| self.tasks[j].demand).sum::<i64>() + self.tasks[pushed].demand
                > self.capacity
        );
        let task = &self.tasks[pushed];
        let (own, head) = match dir {
            Push::Lower => (
                Pred::Ge(task.start, t - task.duration + 1),
                Pred::Ge(task.start, t + 1),
            ),
            Push::Upper => (Pred::Le(task.start, t), Pred::Le(task.start, t - task.duration)),
        };
        let mut body = Vec::with_capacity(1 + 2 * contributors.len());
        if !d.root_entails(own) {
            body.push(own);
        }
        for &j in contributors {
            debug_assert_ne!(j, pushed);
            self.cover_literals(j, t, d, &mut body);
        }
        Explanation::implies(body, head)
    }

    pub fn propagate(&self, d: &impl DomainView, out: &mut Vec<Explanation>) {
        let profile = self.profile(d);
        if let Some(seg) = profile.iter().find(|s| s.height > self.capacity) {
            let mut body = Vec::new();
            for &j in &seg.tasks {
                self.cover_literals(j, seg.start, d, &mut body);
            }
            out.push(Explanation::failure(body));
            return;
        }
        let mut others = Vec::new();
        for (i, task) in self.tasks.iter().enumerate() {
            let p = task.duration;
            let blocking = |seg: &&Segment| {
                let own = if seg.tasks.contains(&i) { task.demand } else { 0 };
                seg.height - own + task.demand > self.capacity
            };
            let (mut lb, mut ub) = (d.lb(task.start), d.ub(task.start));
            for seg in profile.iter().filter(blocking) {
                while lb <= ub && lb <= seg.end && lb + p > seg.start {
                    let t = seg.end.min(lb + p - 1);
                    others.clear();
                    others.extend(seg.tasks.iter().copied().filter(|&j| j != i));
                    out.push(self.pointwise_explanation(i, t, &others, Push::Lower, d));
                    lb = t + 1;
                }
            }
            if lb > ub {
                continue;
            }
            for seg in profile.iter().rev().filter(blocking) {
                while lb <= ub && ub <= seg.end && ub + p > seg.start {
                    let t = seg.start.max(ub);
                    others.clear();
                    others.extend(seg.tasks.iter().copied().filter(|&j| j != i));
                    out.push(self.pointwise_explanation(i, t, &others, Push::Upper, d));
                    ub = t - p;
                }
            }
        }
    }
}
