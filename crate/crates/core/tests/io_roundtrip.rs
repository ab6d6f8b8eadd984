mod common;

use std::fmt::Write;
use std::path::Path;

use common::random_instance;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rcm_core::io::{load_instance, parse_native, parse_psplib, write_native, LoadError};
use rcm_core::model::{validate, Instance};
use rcm_core::search::{solve, SolveConfig, Status};

/// Renders an instance in `.sch` layout. Activity 0 and `n - 1` play the
/// dummy roles only by position.
fn to_sch(inst: &Instance) -> String {
    let n = inst.n();
    let mut s = String::new();
    writeln!(s, "{}\t{}\t0\t0", n - 2, inst.resources()).unwrap();
    for i in 0..n {
        let succ: Vec<_> = inst.precedences.iter().filter(|p| p.from == i).collect();
        write!(s, "{i}\t1\t{}", succ.len()).unwrap();
        for p in &succ {
            write!(s, "\t{}", p.to).unwrap();
        }
        for p in &succ {
            write!(s, "\t[{}]", p.lag).unwrap();
        }
        s.push('\n');
    }
    for i in 0..n {
        write!(s, "{i}\t1\t{}", inst.durations[i]).unwrap();
        for d in &inst.demands[i] {
            write!(s, "\t{d}").unwrap();
        }
        s.push('\n');
    }
    let caps: Vec<String> = inst.capacities.iter().map(i64::to_string).collect();
    writeln!(s, "{}", caps.join("\t")).unwrap();
    s
}

/// Precedences grouped by source, the order a `.sch` file lists them in.
fn grouped(inst: &Instance) -> Instance {
    let mut g = inst.clone();
    g.precedences.sort_by_key(|p| p.from);
    g
}

proptest! {
    #[test]
    fn native_round_trip(seed in any::<u64>(), open in any::<bool>()) {
        let mut inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed));
        if open {
            inst.horizon = None;
        }
        prop_assume!(validate(&inst).is_empty());
        prop_assert_eq!(parse_native(&write_native(&inst)).unwrap(), inst);
    }

    #[test]
    fn psplib_then_native_round_trip(seed in any::<u64>()) {
        let mut inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed));
        inst.horizon = None;
        prop_assume!(inst.n() >= 2);
        let parsed = parse_psplib(&to_sch(&inst)).unwrap();
        prop_assert_eq!(&parsed, &grouped(&inst));
        prop_assert_eq!(parse_native(&write_native(&parsed)).unwrap(), parsed);
    }
}

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn sch_fixture_loads_and_solves() {
    let inst = load_instance(&fixture("tiny.sch")).unwrap();
    assert_eq!(inst.n(), 5);
    assert_eq!(inst.durations, vec![0, 2, 3, 4, 0]);
    assert_eq!(inst.precedences.len(), 7);
    assert_eq!(inst.horizon, None);
    let out = solve(&inst, &SolveConfig::default());
    assert_eq!(out.status, Status::Optimal);
    let oracle = match rcm_core::model::brute_force_solve(&inst, 10_000_000) {
        rcm_core::model::OracleResult::Optimal(s) => s.makespan,
        other => panic!("{other:?}"),
    };
    assert_eq!(out.makespan(), Some(oracle));
}

#[test]
fn example_fixture_matches_builtin() {
    assert_eq!(load_instance(&fixture("example.rcm.json")).unwrap(), Instance::small_example());
}

#[test]
fn load_errors_name_the_file() {
    let err = load_instance(Path::new("/nonexistent/x.sch")).unwrap_err();
    assert!(matches!(err, LoadError::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/x.sch"));
}
