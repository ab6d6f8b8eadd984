//! Acceptance criteria A1-A8. Prints one PASS/FAIL/SKIP line per criterion
//! and exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::{corpus, find_schedule, Restrictions};
use rcm_core::io::{load_instance, parse_native};
use rcm_core::lits::{IntVar, Pred};
use rcm_core::model::{brute_force_solve, check_schedule, Instance, OracleResult};
use rcm_core::props::{prop_precedence, Bounds, PrecedenceProp, Task, Timetable};
use rcm_core::search::{
    phase1_switch_nodes, solve, Action, Controller, SolveConfig, SolveOutcome, Solver, Status, Strategy,
    PHASE2_SWITCH_NODES,
};
use rcm_core::tempo::{compute_temporal, trivial_horizon};

const CORPUS_SIZE: usize = 200;
const ORACLE_BUDGET: u64 = 50_000_000;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Status and optimal makespan in a form comparable across solvers.
fn value(out: &SolveOutcome) -> (Status, Option<i64>) {
    (out.status, out.makespan())
}

fn a1() -> Result<Verdict, String> {
    let text = std::fs::read_to_string(fixture("example.rcm.json")).map_err(|e| e.to_string())?;
    let inst = parse_native(&text).map_err(|e| e.to_string())?;
    check(inst == Instance::small_example(), "parsed instance differs from the built-in example")?;
    let h = trivial_horizon(&inst);
    check(h == 15, format!("trivial horizon {h}"))?;
    let t = compute_temporal(&inst, h).map_err(|e| e.to_string())?;
    check(t.est == [0, 2, 3, 0, 3], format!("est {:?}", t.est))?;
    check(t.lst == [8, 10, 12, 10, 13], format!("lst {:?}", t.lst))?;
    let oracle = match brute_force_solve(&inst, ORACLE_BUDGET) {
        OracleResult::Optimal(s) => s.makespan,
        other => return Err(format!("oracle: {other:?}")),
    };
    check(oracle == 8, format!("oracle optimum {oracle}"))?;
    let mut slowest = Duration::ZERO;
    for s in Strategy::ALL {
        let start = Instant::now();
        let out = solve(&inst, &SolveConfig::new(s));
        let took = start.elapsed();
        slowest = slowest.max(took);
        check(value(&out) == (Status::Optimal, Some(oracle)), format!("{s}: {:?}", value(&out)))?;
        check_schedule(&inst, out.schedule.as_ref().unwrap()).map_err(|v| format!("{s}: {v:?}"))?;
        check(took < Duration::from_secs(1), format!("{s} took {took:?}"))?;
    }
    Ok(Verdict::Pass(format!("horizon 15, windows match, optimum 8 for all strategies (slowest {slowest:?})")))
}

fn a2() -> Result<Verdict, String> {
    let inst = Instance::small_example();
    let mut s = Solver::new();
    let xs: Vec<IntVar> = [(1, 2), (0, 3), (3, 5), (0, 2), (0, 4)]
        .iter()
        .map(|&(lo, hi)| s.new_int_var(lo, hi).unwrap())
        .collect();
    s.post_timetable(Timetable::new(
        inst.capacities[0],
        (0..5).map(|i| Task { start: xs[i], duration: inst.durations[i], demand: inst.demand(i, 0) }),
    ));
    s.fixpoint().map_err(|c| format!("unexpected conflict {c:?}"))?;
    let t = &s.engine.trail;
    let doms: Vec<(i64, i64)> = xs.iter().map(|&x| t.domain_of(x)).collect();
    check(doms == [(1, 1), (3, 3), (5, 5), (0, 0), (3, 3)], format!("fixpoint {doms:?}"))?;
    check(t.decision_level() == 0, "search was needed")?;
    Ok(Verdict::Pass("fixpoint (1,3,5,0,3) with no decisions".into()))
}

fn a3() -> Result<Verdict, String> {
    let (a, b, c, e) = (IntVar(0), IntVar(1), IntVar(2), IntVar(4));
    let mut out = Vec::new();
    prop_precedence(&PrecedenceProp { from: a, to: b, lag: 2 }, &Bounds::new(&[(0, 15), (0, 15)]), &mut out);
    let clauses: BTreeSet<Vec<Pred>> = out.iter().map(|x| x.clause()).collect();
    // not [s_b <= 15] or [s_a <= 13];  [s_a <= -1] or not [s_b <= 1]
    let expect: BTreeSet<Vec<Pred>> =
        [vec![Pred::Ge(b, 16), Pred::Le(a, 13)], vec![Pred::Le(a, -1), Pred::Ge(b, 2)]].into();
    check(clauses == expect, format!("precedence clauses {clauses:?}"))?;

    let inst = Instance::small_example();
    let tt = Timetable::new(
        4,
        (0..5).map(|i| Task { start: IntVar(i as u32), duration: inst.durations[i], demand: inst.demand(i, 0) }),
    );
    let d = Bounds::new(&[(1, 1), (3, 3), (3, 5), (0, 0), (3, 4)]).with_root(&[(0, 15); 5]);
    let mut out = Vec::new();
    tt.propagate(&d, &mut out);
    let push = out
        .iter()
        .find(|x| x.head == Some(Pred::Ge(c, 5)))
        .ok_or("no explanation with head [5 <= s_c]")?;
    let body: BTreeSet<Pred> = push.body.iter().copied().collect();
    let expect: BTreeSet<Pred> = [Pred::Ge(c, 2), Pred::Le(b, 4), Pred::Ge(e, 3), Pred::Le(e, 4)].into();
    check(body == expect, format!("pointwise body {body:?}"))?;
    Ok(Verdict::Pass("precedence clauses and pointwise explanation match".into()))
}

fn a4(insts: &[Instance]) -> Result<Verdict, String> {
    let start = Instant::now();
    let (mut feasible, mut infeasible) = (0, 0);
    for (k, inst) in insts.iter().enumerate() {
        let expect = match brute_force_solve(inst, ORACLE_BUDGET) {
            OracleResult::Optimal(s) => (Status::Optimal, Some(s.makespan)),
            OracleResult::Infeasible => (Status::Infeasible, None),
            OracleResult::Exhausted => return Err(format!("instance {k}: oracle budget exhausted")),
        };
        let out = solve(inst, &SolveConfig::default());
        check(value(&out) == expect, format!("instance {k}: solver {:?}, oracle {expect:?}", value(&out)))?;
        if let Some(s) = &out.schedule {
            check_schedule(inst, s).map_err(|v| format!("instance {k}: {v:?}"))?;
            feasible += 1;
        } else {
            infeasible += 1;
        }
    }
    let took = start.elapsed();
    check(took <= Duration::from_secs(300), format!("took {took:?}"))?;
    Ok(Verdict::Pass(format!(
        "{}/{} agree ({feasible} optimal, {infeasible} infeasible) in {took:.2?}",
        insts.len(),
        insts.len()
    )))
}

fn a5(insts: &[Instance]) -> Result<Verdict, String> {
    let mut total = 0usize;
    for (k, inst) in insts.iter().enumerate() {
        for strategy in [Strategy::HotRestart, Strategy::Mslf, Strategy::Vsids] {
            let mut cfg = SolveConfig::new(strategy);
            cfg.record_nogoods = true;
            let out = solve(inst, &cfg);
            for (m, r) in out.nogoods.iter().enumerate() {
                total += 1;
                let at = || format!("instance {k}, {strategy}, nogood {m}: {r:?}");
                let current = r.levels.iter().filter(|&&l| l == r.conflict_level).count();
                check(current == 1, format!("{} has {current} current-level literals", at()))?;
                let asserting = r.values_after_backjump[0].is_none()
                    && r.values_after_backjump[1..].iter().all(|&v| v == Some(false));
                check(asserting, format!("{} is not asserting after backjump", at()))?;
                let mut q = Restrictions::new(inst.n());
                q.max_makespan = Some(r.objective_ub);
                let consistent = r.lits.iter().all(|&(atom, pos)| q.require(inst, atom, !pos));
                if consistent {
                    if let Some(s) = find_schedule(inst, r.horizon, &q) {
                        return Err(format!("{} is violated by schedule {s:?}", at()));
                    }
                }
            }
        }
    }
    Ok(Verdict::Pass(format!("{total} nogoods checked, 0 violations")))
}

/// Drives a controller for `nodes` decisions and returns its actions.
fn drive(mut c: Controller, nodes: u64) -> (Controller, Vec<(Action, u64)>) {
    let mut actions = Vec::new();
    while c.nodes() < nodes {
        match c.before_decision() {
            Action::Continue => c.on_decision(),
            a => actions.push((a, c.nodes())),
        }
    }
    (c, actions)
}

fn a6() -> Result<Verdict, String> {
    let (c, _) = drive(Controller::new(Strategy::Restart, 0), 4000);
    check(c.restart_intervals == [250, 500, 1000, 2000], format!("restart intervals {:?}", c.restart_intervals))?;
    let (c, _) = drive(Controller::new(Strategy::MslfRestart, 0), 800);
    check(c.restart_intervals == [250, 500], format!("mslf restart intervals {:?}", c.restart_intervals))?;
    let (c, acts) = drive(Controller::new(Strategy::HotStart, PHASE2_SWITCH_NODES), 2000);
    check(c.switched_at == Some(500) && acts.len() == 1, format!("hot start switch {:?} {acts:?}", c.switched_at))?;
    let (_, acts) = drive(Controller::new(Strategy::HotRestart, PHASE2_SWITCH_NODES), 2300);
    check(
        acts == [(Action::Switch, 500), (Action::Restart, 750), (Action::Restart, 1250), (Action::Restart, 2250)],
        format!("hot restart actions {acts:?}"),
    )?;

    // The thresholds a real solve uses, and its recorded counters.
    let inst = Instance::small_example();
    let out = solve(&inst, &SolveConfig::new(Strategy::HotRestart));
    let p = &out.stats.phases;
    check(p.len() == 2, format!("{} phases", p.len()))?;
    check(p[0].switch_threshold == Some(phase1_switch_nodes(5)) && phase1_switch_nodes(5) == 25, "phase 1 threshold")?;
    check(p[1].switch_threshold == Some(500), "phase 2 threshold")?;
    for ph in p {
        if let Some(at) = ph.switched_at {
            check(Some(at) == ph.switch_threshold, format!("switched at {at}"))?;
        } else {
            check(ph.nodes < ph.switch_threshold.unwrap_or(0), "threshold reached but no switch")?;
        }
    }
    let out = solve(&hard_instance(), &SolveConfig { node_limit: Some(3000), ..SolveConfig::new(Strategy::Restart) });
    let iv = &out.stats.phases.last().unwrap().restart_intervals;
    check(
        [250, 500, 1000].starts_with(iv) || iv.starts_with(&[250, 500, 1000]),
        format!("solver restart intervals {iv:?}"),
    )?;
    let observed = out.stats.phases.iter().map(|p| p.restart_intervals.len()).sum::<usize>();
    Ok(Verdict::Pass(format!(
        "controller triggers 250/500/1000/2000, switch at 500 and 5n; {observed} restarts observed in a live solve"
    )))
}

/// A small instance whose optimality proof takes the solver many nodes.
fn hard_instance() -> Instance {
    let durations = vec![3, 5, 2, 4, 6, 3, 5, 2, 4, 3, 6, 2];
    let demands = vec![
        vec![2, 1], vec![1, 2], vec![3, 1], vec![2, 2], vec![1, 3], vec![2, 1],
        vec![3, 2], vec![1, 1], vec![2, 3], vec![3, 1], vec![1, 2], vec![2, 2],
    ];
    Instance {
        durations,
        demands,
        capacities: vec![4, 4],
        precedences: vec![],
        horizon: None,
    }
}

fn a7() -> Result<Verdict, String> {
    let Ok(dir) = std::env::var("RCM_J10_DIR") else {
        return Ok(Verdict::Skip("set RCM_J10_DIR to a directory of j10 .sch files".into()));
    };
    let bounds = std::env::var("RCM_J10_BOUNDS").ok().map(read_bounds).transpose()?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| format!("{dir}: {e}"))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("sch")))
        .collect();
    files.sort();
    let mut matched = 0;
    for f in &files {
        let inst = load_instance(f).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let out = solve(&inst, &SolveConfig::default().time_limit(Duration::from_secs(1)));
        let took = start.elapsed();
        check(
            matches!(out.status, Status::Optimal | Status::Infeasible) && took <= Duration::from_secs(1),
            format!("{}: {} after {took:?}", f.display(), out.status),
        )?;
        let stem = f.file_stem().unwrap().to_string_lossy().to_string();
        if let Some(&(lb, ub)) = bounds.as_ref().and_then(|b| b.get(&stem)) {
            if lb == ub {
                check(out.makespan() == Some(lb), format!("{stem}: {:?} vs known {lb}", out.makespan()))?;
                matched += 1;
            }
        }
    }
    Ok(Verdict::Pass(format!("{} instances resolved within 1 s, {matched} optima matched", files.len())))
}

fn read_bounds(path: String) -> Result<std::collections::HashMap<String, (i64, i64)>, String> {
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let mut map = std::collections::HashMap::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if let [name, lb, ub] = f[..] {
            if let (Ok(lb), Ok(ub)) = (lb.parse(), ub.parse()) {
                map.insert(name.to_string(), (lb, ub));
            }
        }
    }
    Ok(map)
}

fn a8(insts: &[Instance]) -> Result<Verdict, String> {
    for (k, inst) in insts.iter().enumerate() {
        let reference = value(&solve(inst, &SolveConfig::new(Strategy::Mslf)));
        for s in Strategy::ALL {
            let v = value(&solve(inst, &SolveConfig::new(s)));
            check(v == reference, format!("instance {k}: {s} gives {v:?}, mslf gives {reference:?}"))?;
        }
    }
    Ok(Verdict::Pass(format!("six strategies agree on {} instances", insts.len())))
}

type Criterion<'a> = Box<dyn Fn() -> Result<Verdict, String> + 'a>;

fn main() {
    let insts = corpus(CORPUS_SIZE);
    let criteria: Vec<(&str, Criterion)> = vec![
        ("A1", Box::new(a1)),
        ("A2", Box::new(a2)),
        ("A3", Box::new(a3)),
        ("A4", Box::new(|| a4(&insts))),
        ("A5", Box::new(|| a5(&insts))),
        ("A6", Box::new(a6)),
        ("A7", Box::new(a7)),
        ("A8", Box::new(|| a8(&insts))),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        let verdict = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(Ok(v)) => v,
            Ok(Err(msg)) => Verdict::Fail(msg),
            Err(_) => Verdict::Fail("panicked".into()),
        };
        match verdict {
            Verdict::Pass(msg) => println!("{name} PASS {msg}"),
            Verdict::Skip(msg) => println!("{name} SKIP {msg}"),
            Verdict::Fail(msg) => {
                failed += 1;
                println!("{name} FAIL {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
