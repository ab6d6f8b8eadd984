//! Branching strategies and the restart/switch controller.

use std::fmt;
use std::str::FromStr;

use crate::engine::GeometricRestart;
use crate::lits::{DomainView, IntVar};

/// Search strategy for the optimisation phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Smallest latest-start-time first.
    Mslf,
    /// `Mslf` with geometric restarts.
    MslfRestart,
    /// Activity-based branching on literals.
    Vsids,
    /// `Vsids` with geometric restarts.
    Restart,
    /// `Mslf` until a node threshold, then `Vsids`.
    HotStart,
    /// `HotStart`, with geometric restarts after the switch.
    HotRestart,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Mslf,
        Strategy::MslfRestart,
        Strategy::Vsids,
        Strategy::Restart,
        Strategy::HotStart,
        Strategy::HotRestart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Mslf => "mslf",
            Strategy::MslfRestart => "mslf-restart",
            Strategy::Vsids => "vsids",
            Strategy::Restart => "restart",
            Strategy::HotStart => "hot-start",
            Strategy::HotRestart => "hot-restart",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownStrategy(pub String);

impl fmt::Display for UnknownStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = Strategy::ALL.iter().map(|s| s.name()).collect();
        write!(f, "unknown strategy '{}' (expected one of {})", self.0, names.join(", "))
    }
}

impl std::error::Error for UnknownStrategy {}

impl FromStr for Strategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == key)
            .ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Mslf,
    Vsids,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Continue,
    Restart,
    /// Restart and continue with activity-based branching.
    Switch,
}

/// Decides when to restart and when a hybrid strategy changes mode.
#[derive(Clone, Debug)]
pub struct Controller {
    mode: Mode,
    switch_at: Option<u64>,
    restarts: Option<GeometricRestart>,
    after_switch: Option<GeometricRestart>,
    nodes: u64,
    since_restart: u64,
    /// Node counts between consecutive scheduled restarts.
    pub restart_intervals: Vec<u64>,
    /// Node count at which the mode switched, if it did.
    pub switched_at: Option<u64>,
}

impl Controller {
    /// `threshold` is the node count at which hybrid strategies switch.
    pub fn new(strategy: Strategy, threshold: u64) -> Self {
        let geo = Some(GeometricRestart::default());
        let (mode, switch_at, restarts, after_switch) = match strategy {
            Strategy::Mslf => (Mode::Mslf, None, None, None),
            Strategy::MslfRestart => (Mode::Mslf, None, geo, None),
            Strategy::Vsids => (Mode::Vsids, None, None, None),
            Strategy::Restart => (Mode::Vsids, None, geo, None),
            Strategy::HotStart => (Mode::Mslf, Some(threshold), None, None),
            Strategy::HotRestart => (Mode::Mslf, Some(threshold), None, geo),
        };
        Controller {
            mode,
            switch_at,
            restarts,
            after_switch,
            nodes: 0,
            since_restart: 0,
            restart_intervals: Vec::new(),
            switched_at: None,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    /// Called before each decision.
    pub fn before_decision(&mut self) -> Action {
        if self.mode == Mode::Mslf && self.switch_at.is_some_and(|s| self.nodes >= s) {
            self.mode = Mode::Vsids;
            self.restarts = self.after_switch.take();
            self.switched_at = Some(self.nodes);
            self.since_restart = 0;
            return Action::Switch;
        }
        if let Some(r) = &mut self.restarts {
            if r.restart_due(self.since_restart) {
                r.on_restart();
                self.restart_intervals.push(self.since_restart);
                self.since_restart = 0;
                return Action::Restart;
            }
        }
        Action::Continue
    }

    pub fn on_decision(&mut self) {
        self.nodes += 1;
        self.since_restart += 1;
    }
}

/// The unfixed activity with the smallest earliest start; ties go to the
/// largest domain, then the lowest index. Branching sets its start to the
/// earliest value.
pub fn mslf_pick(starts: &[IntVar], d: &impl DomainView) -> Option<(usize, i64)> {
    starts
        .iter()
        .enumerate()
        .filter(|&(_, &x)| !d.is_fixed(x))
        .min_by_key(|&(i, &x)| (d.lb(x), std::cmp::Reverse(d.ub(x) - d.lb(x)), i))
        .map(|(i, &x)| (i, d.lb(x)))
}
