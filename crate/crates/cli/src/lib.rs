//! Command-line front end: solve single instances, run benchmark batches,
//! and validate schedules.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use rcm_core::io::{load_instance, parse_schedule, write_schedule};
use rcm_core::{check_schedule, solve, Instance, Schedule, SolveConfig, SolveOutcome, Status, Strategy};
use serde::{Deserialize, Serialize};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rcm", version, about = "Lazy clause generation solver for RCPSP/max")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance to proven optimality or until the time limit.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value = "hot-restart", value_parser = strategy_parser())]
        strategy: Strategy,
        /// Seconds for both phases together.
        #[arg(long, env = "RCM_TIME_LIMIT")]
        time_limit: Option<f64>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        /// Write the start times here as well.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Tie-breaking noise for VSIDS.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Solve every instance in a directory and summarize.
    Bench {
        dir: PathBuf,
        #[arg(long, default_value = "hot-restart", value_parser = strategy_parser())]
        strategy: Strategy,
        #[arg(long, env = "RCM_TIME_LIMIT")]
        time_limit: Option<f64>,
        /// CSV with header `instance,lb,ub`, keyed by file stem.
        #[arg(long)]
        bounds_file: Option<PathBuf>,
        /// Per-instance records as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; 0 picks the number of cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Check a schedule file against an instance.
    Check { instance: PathBuf, schedule: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = write!(out, "{}", e.render());
                return EXIT_OK;
            }
            let text = e.render().to_string();
            let _ = write!(err, "{text}");
            if !text.contains("Usage:") {
                let _ = writeln!(err, "\n{}", Cli::command().render_usage());
            }
            return EXIT_ERROR;
        }
    };
    let result = match cli.command {
        Command::Solve { instance, strategy, time_limit, format, output, seed } => {
            limit(time_limit).and_then(|tl| cmd_solve(&instance, config(strategy, tl, seed), format, output.as_deref(), out))
        }
        Command::Bench { dir, strategy, time_limit, bounds_file, csv, seed, jobs } => limit(time_limit).and_then(|tl| {
            let opts = BenchOptions { config: config(strategy, tl, seed), bounds_file, csv, jobs };
            cmd_bench(&dir, &opts, out)
        }),
        Command::Check { instance, schedule } => cmd_check(&instance, &schedule, out),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

fn strategy_parser() -> impl TypedValueParser<Value = Strategy> {
    PossibleValuesParser::new(Strategy::ALL.map(Strategy::name)).map(|s| s.parse::<Strategy>().expect("listed name"))
}

fn limit(secs: Option<f64>) -> Result<Option<Duration>, String> {
    secs.map(|s| Duration::try_from_secs_f64(s).map_err(|_| format!("invalid time limit {s}")))
        .transpose()
}

fn config(strategy: Strategy, time_limit: Option<Duration>, seed: u64) -> SolveConfig {
    SolveConfig { strategy, time_limit, seed, ..SolveConfig::default() }
}

fn exit_code(status: Status) -> i32 {
    match status {
        Status::Unknown => EXIT_UNKNOWN,
        _ => EXIT_OK,
    }
}

#[derive(Debug, Serialize)]
struct SolveReport<'a> {
    status: &'a str,
    makespan: Option<i64>,
    starts: Option<&'a [i64]>,
    strategy: &'a str,
    runtime: f64,
    phase1_time: f64,
    nodes: u64,
    fails: u64,
    restarts: u64,
    solutions: u64,
}

pub fn cmd_solve(
    path: &Path,
    cfg: SolveConfig,
    format: OutputFormat,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, String> {
    let inst = load_instance(path).map_err(|e| e.to_string())?;
    let res = solve(&inst, &cfg);
    let starts = res.schedule.as_ref().map(|s| s.starts.as_slice());
    let report = SolveReport {
        status: res.status.name(),
        makespan: res.makespan(),
        starts,
        strategy: cfg.strategy.name(),
        runtime: res.stats.runtime.as_secs_f64(),
        phase1_time: res.stats.phase1_time.as_secs_f64(),
        nodes: res.stats.nodes,
        fails: res.stats.fails,
        restarts: res.stats.restarts,
        solutions: res.stats.solutions,
    };
    let io = |e: std::io::Error| e.to_string();
    match format {
        OutputFormat::Text => {
            match report.makespan {
                Some(m) => writeln!(out, "{} {m}", report.status),
                None => writeln!(out, "{}", report.status),
            }
            .map_err(io)?;
            if let Some(s) = starts {
                write!(out, "{}", write_schedule(s)).map_err(io)?;
            }
            writeln!(
                out,
                "strategy={} runtime={:.3}s phase1={:.3}s nodes={} fails={} restarts={} solutions={}",
                report.strategy, report.runtime, report.phase1_time, report.nodes, report.fails, report.restarts, report.solutions
            )
            .map_err(io)?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &report).map_err(|e| e.to_string())?;
            writeln!(out).map_err(io)?;
        }
    }
    if let (Some(file), Some(s)) = (output, starts) {
        fs::write(file, write_schedule(s)).map_err(|e| format!("{}: {e}", file.display()))?;
    }
    Ok(exit_code(res.status))
}

pub fn cmd_check(instance: &Path, schedule: &Path, out: &mut dyn Write) -> Result<i32, String> {
    let inst = load_instance(instance).map_err(|e| e.to_string())?;
    let text = fs::read_to_string(schedule).map_err(|e| format!("{}: {e}", schedule.display()))?;
    let starts = parse_schedule(&text).map_err(|e| format!("{}: {e}", schedule.display()))?;
    if starts.len() != inst.n() {
        return Err(format!("schedule has {} start times, instance has {} activities", starts.len(), inst.n()));
    }
    let io = |e: std::io::Error| e.to_string();
    match check_schedule(&inst, &Schedule::new(&inst, starts)) {
        Ok(()) => {
            writeln!(out, "ok").map_err(io)?;
            Ok(EXIT_OK)
        }
        Err(violations) => {
            for v in &violations {
                writeln!(out, "violation: {v}").map_err(io)?;
            }
            Ok(EXIT_ERROR)
        }
    }
}

pub struct BenchOptions {
    pub config: SolveConfig,
    pub bounds_file: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub jobs: usize,
}

/// One row of a benchmark run. Column order is the CSV schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    /// OPTIMAL, FEASIBLE, INFEASIBLE, UNKNOWN, or ERROR when the file could
    /// not be loaded.
    pub status: String,
    pub makespan: Option<i64>,
    pub lb: Option<i64>,
    pub ub: Option<i64>,
    pub runtime: f64,
    pub nodes: u64,
    pub fails: u64,
    pub strategy: String,
    pub phase1_time: f64,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
pub struct Bound {
    pub lb: Option<i64>,
    pub ub: Option<i64>,
}

#[derive(Deserialize)]
struct BoundRow {
    instance: String,
    lb: Option<i64>,
    ub: Option<i64>,
}

pub fn read_bounds(path: &Path) -> Result<HashMap<String, Bound>, String> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut map = HashMap::new();
    for row in reader.deserialize() {
        let r: BoundRow = row.map_err(|e| format!("{}: {e}", path.display()))?;
        map.insert(r.instance, Bound { lb: r.lb, ub: r.ub });
    }
    Ok(map)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub instances: usize,
    pub rt_avg: f64,
    pub fails_avg: f64,
    pub feas: f64,
    pub infeas: f64,
    pub opt: f64,
    /// Instances proven optimal or infeasible.
    pub solved: usize,
    /// Mean of `100 (makespan - lb) / lb` over feasible instances with a
    /// positive known lower bound.
    pub delta_lb: Option<f64>,
    /// Same against the known upper bound.
    pub delta_ub: Option<f64>,
    /// Instances absent from the bounds file.
    pub missing_bounds: Vec<String>,
    pub errors: usize,
}

fn pct(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// `bounds` is `None` when no bounds file was given; then nothing is
/// reported missing.
pub fn summarize(records: &[RunRecord], bounds: Option<&HashMap<String, Bound>>) -> Summary {
    let total = records.len();
    let count = |s: &str| records.iter().filter(|r| r.status == s).count();
    let optimal = count(Status::Optimal.name());
    let feasible = optimal + count(Status::Feasible.name());
    let infeasible = count(Status::Infeasible.name());
    let deviation = |bound: fn(&RunRecord) -> Option<i64>| {
        mean(records.iter().filter_map(|r| {
            let (m, b) = (r.makespan?, bound(r)?);
            (b > 0).then(|| 100.0 * (m - b) as f64 / b as f64)
        }))
    };
    let missing_bounds = match bounds {
        Some(b) => records.iter().filter(|r| !b.contains_key(&r.instance)).map(|r| r.instance.clone()).collect(),
        None => Vec::new(),
    };
    Summary {
        instances: total,
        rt_avg: mean(records.iter().map(|r| r.runtime)).unwrap_or(0.0),
        fails_avg: mean(records.iter().map(|r| r.fails as f64)).unwrap_or(0.0),
        feas: pct(feasible, total),
        infeas: pct(infeasible, total),
        opt: pct(optimal, total),
        solved: optimal + infeasible,
        delta_lb: deviation(|r| r.lb),
        delta_ub: deviation(|r| r.ub),
        missing_bounds,
        errors: count("ERROR"),
    }
}

/// Instance files in `dir`: `.sch` and `.json`, sorted by file name.
pub fn instance_files(dir: &Path) -> Result<Vec<PathBuf>, String> {
    let entries = fs::read_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && matches!(p.extension().and_then(|e| e.to_str()), Some("sch" | "json")))
        .collect();
    files.sort();
    Ok(files)
}

fn stem(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    // `x.rcm.json` and `x.sch` both key as `x`.
    name.split('.').next().unwrap_or_default().to_string()
}

fn record(name: String, cfg: &SolveConfig, bound: Option<Bound>, loaded: Result<Instance, String>) -> RunRecord {
    let mut rec = RunRecord {
        instance: name,
        status: "ERROR".into(),
        makespan: None,
        lb: bound.and_then(|b| b.lb),
        ub: bound.and_then(|b| b.ub),
        runtime: 0.0,
        nodes: 0,
        fails: 0,
        strategy: cfg.strategy.name().into(),
        phase1_time: 0.0,
        error: None,
    };
    match loaded {
        Ok(inst) => {
            let res: SolveOutcome = solve(&inst, cfg);
            rec.status = res.status.name().into();
            rec.makespan = res.makespan();
            rec.runtime = res.stats.runtime.as_secs_f64();
            rec.nodes = res.stats.nodes;
            rec.fails = res.stats.fails;
            rec.phase1_time = res.stats.phase1_time.as_secs_f64();
        }
        Err(e) => rec.error = Some(e),
    }
    rec
}

/// Solves every instance file in `dir`. Records come back sorted by
/// instance name whatever the thread count.
pub fn run_bench(dir: &Path, opts: &BenchOptions) -> Result<(Vec<RunRecord>, Summary), String> {
    let bounds = opts.bounds_file.as_deref().map(read_bounds).transpose()?;
    let files = instance_files(dir)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs).build().map_err(|e| e.to_string())?;
    let mut records: Vec<RunRecord> = pool.install(|| {
        files
            .par_iter()
            .map(|p| {
                let name = stem(p);
                let bound = bounds.as_ref().and_then(|b| b.get(&name).copied());
                record(name, &opts.config, bound, load_instance(p).map_err(|e| e.to_string()))
            })
            .collect()
    });
    records.sort_by(|a, b| a.instance.cmp(&b.instance));
    let summary = summarize(&records, bounds.as_ref());
    Ok((records, summary))
}

pub fn write_csv(records: &[RunRecord], w: impl Write) -> Result<(), String> {
    let mut writer = csv::Writer::from_writer(w);
    for r in records {
        writer.serialize(r).map_err(|e| e.to_string())?;
    }
    writer.flush().map_err(|e| e.to_string())
}

fn opt_num(v: Option<impl std::fmt::Display>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

pub fn cmd_bench(dir: &Path, opts: &BenchOptions, out: &mut dyn Write) -> Result<i32, String> {
    let (records, summary) = run_bench(dir, opts)?;
    if let Some(path) = &opts.csv {
        let file = fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
        write_csv(&records, file)?;
    }
    let io = |e: std::io::Error| e.to_string();
    writeln!(out, "{:<24} {:<10} {:>8} {:>6} {:>6} {:>9} {:>10} {:>10}", "instance", "status", "makespan", "lb", "ub", "runtime", "nodes", "fails")
        .map_err(io)?;
    for r in &records {
        let flag = if summary.missing_bounds.contains(&r.instance) { "  (no bounds)" } else { "" };
        writeln!(
            out,
            "{:<24} {:<10} {:>8} {:>6} {:>6} {:>9.3} {:>10} {:>10}{flag}",
            r.instance,
            r.status,
            opt_num(r.makespan),
            opt_num(r.lb),
            opt_num(r.ub),
            r.runtime,
            r.nodes,
            r.fails
        )
        .map_err(io)?;
        if let Some(e) = &r.error {
            writeln!(out, "  error: {e}").map_err(io)?;
        }
    }
    let s = &summary;
    writeln!(
        out,
        "summary: instances={} rt_avg={:.3} fails={:.1} feas={:.1}% infeas={:.1}% opt={:.1}% svd={} delta_lb={} delta_ub={}",
        s.instances,
        s.rt_avg,
        s.fails_avg,
        s.feas,
        s.infeas,
        s.opt,
        s.solved,
        opt_num(s.delta_lb.map(|d| format!("{d:.2}"))),
        opt_num(s.delta_ub.map(|d| format!("{d:.2}"))),
    )
    .map_err(io)?;
    if !s.missing_bounds.is_empty() {
        writeln!(out, "missing bounds: {}", s.missing_bounds.join(" ")).map_err(io)?;
    }
    Ok(if s.errors > 0 { EXIT_ERROR } else { EXIT_OK })
}
