//! Browser bindings. Each operation takes and returns JSON text so the page
//! needs no generated type glue; the plain functions are usable natively.

use std::time::Duration;

use rcm_core::engine::ClauseKind;
use rcm_core::io::{parse_native, write_native};
use rcm_core::search::{BuildError, RcpspModel};
use rcm_core::tempo::compute_temporal;
use rcm_core::{solve, Instance, SolveConfig, Strategy};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct SolveView {
    pub status: String,
    pub makespan: Option<i64>,
    pub starts: Option<Vec<i64>>,
    /// Usage per resource at each time step `0..makespan`.
    pub profile: Vec<Vec<i64>>,
    pub improvements: Vec<i64>,
    pub nodes: u64,
    pub fails: u64,
    pub restarts: u64,
    pub runtime_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct TemporalView {
    pub horizon: i64,
    pub est: Vec<i64>,
    pub lst: Vec<i64>,
    pub tail: Vec<i64>,
    pub lower_bound: i64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Restriction {
    /// Optional `[lo, hi]` per activity.
    pub windows: Vec<Option<(i64, i64)>>,
    pub max_makespan: Option<i64>,
}

#[derive(Debug, Serialize)]
pub struct PropagationView {
    pub consistent: bool,
    pub windows: Vec<(i64, i64)>,
    pub makespan: Option<(i64, i64)>,
}

fn instance(json: &str) -> Result<Instance, String> {
    parse_native(json).map_err(|e| e.to_string())
}

/// Resource usage of `starts` at each time step up to the makespan.
pub fn resource_profile(inst: &Instance, starts: &[i64]) -> Vec<Vec<i64>> {
    let end = starts.iter().zip(&inst.durations).map(|(s, p)| s + p).max().unwrap_or(0).max(0);
    (0..inst.resources())
        .map(|k| {
            (0..end)
                .map(|t| {
                    (0..inst.n())
                        .filter(|&i| starts[i] <= t && t < starts[i] + inst.durations[i])
                        .map(|i| inst.demand(i, k))
                        .sum()
                })
                .collect()
        })
        .collect()
}

pub fn solve_instance(json: &str, strategy: &str, time_limit_ms: f64) -> Result<SolveView, String> {
    let inst = instance(json)?;
    let strategy: Strategy = strategy.parse().map_err(|e| format!("{e}"))?;
    let mut cfg = SolveConfig::new(strategy);
    if time_limit_ms.is_finite() && time_limit_ms >= 0.0 {
        cfg.time_limit = Some(Duration::from_secs_f64(time_limit_ms / 1000.0));
    }
    let out = solve(&inst, &cfg);
    let starts = out.schedule.as_ref().map(|s| s.starts.clone());
    Ok(SolveView {
        status: out.status.name().into(),
        makespan: out.makespan(),
        profile: starts.as_deref().map(|s| resource_profile(&inst, s)).unwrap_or_default(),
        starts,
        improvements: out.improvements,
        nodes: out.stats.nodes,
        fails: out.stats.fails,
        restarts: out.stats.restarts,
        runtime_ms: out.stats.runtime.as_secs_f64() * 1000.0,
    })
}

pub fn temporal_windows(json: &str) -> Result<TemporalView, String> {
    let inst = instance(json)?;
    let t = compute_temporal(&inst, inst.effective_horizon()).map_err(|e| e.to_string())?;
    Ok(TemporalView { horizon: t.horizon, lower_bound: t.makespan_lower_bound(), est: t.est, lst: t.lst, tail: t.tail })
}

/// Narrows the start windows and the makespan bound, then runs all
/// propagators to a fixpoint without search.
pub fn propagate_windows(json: &str, restriction: &Restriction) -> Result<PropagationView, String> {
    let inst = instance(json)?;
    if restriction.windows.len() > inst.n() {
        return Err(format!("{} windows given for {} activities", restriction.windows.len(), inst.n()));
    }
    let failed = |inst: &Instance| PropagationView { consistent: false, windows: vec![(0, -1); inst.n()], makespan: None };
    let mut model = match RcpspModel::build(&inst, inst.effective_horizon()) {
        Ok(m) => m,
        Err(BuildError::Temporal(_) | BuildError::RootFailure) => return Ok(failed(&inst)),
    };
    let mut units = Vec::new();
    for (i, w) in restriction.windows.iter().enumerate() {
        if let Some((lo, hi)) = *w {
            units.push(model.trail().ge(model.starts[i], lo));
            units.push(model.trail().le(model.starts[i], hi));
        }
    }
    if let Some(m) = restriction.max_makespan {
        units.push(model.trail().le(model.objective, m));
    }
    let ok = units.iter().all(|&u| model.solver.add_clause(&[u], ClauseKind::Original).is_ok()) && model.solver.fixpoint().is_ok();
    if !ok {
        return Ok(failed(&inst));
    }
    Ok(PropagationView {
        consistent: true,
        windows: model.windows(),
        makespan: Some(model.trail().domain_of(model.objective)),
    })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn example_instance() -> String {
    write_native(&Instance::small_example())
}

#[wasm_bindgen]
pub fn strategies() -> String {
    serde_json::to_string(&Strategy::ALL.map(Strategy::name)).expect("strings serialize")
}

/// Negative or non-finite limits mean no limit.
#[wasm_bindgen]
pub fn solve_json(instance: &str, strategy: &str, time_limit_ms: f64) -> Result<String, JsError> {
    to_json(solve_instance(instance, strategy, time_limit_ms))
}

#[wasm_bindgen]
pub fn temporal_json(instance: &str) -> Result<String, JsError> {
    to_json(temporal_windows(instance))
}

#[wasm_bindgen]
pub fn propagate_json(instance: &str, restriction: &str) -> Result<String, JsError> {
    let r: Restriction = serde_json::from_str(restriction).map_err(|e| JsError::new(&e.to_string()))?;
    to_json(propagate_windows(instance, &r))
}
