//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::augment::{solve_with, ClaimedBound, SolveOptions, SolveReport};
use crate::cost::{self, parse_cost, Cost};
use crate::deficiency::rooted_max_level;
use crate::error::{Error, Result};
use crate::exact::{brute_force_opt, residual_optima, DEFAULT_UNIT_CEILING};
use crate::gen::{corpus_instance, generate, GenMode, GenParams};
use crate::instance::{
    parse_instance_with, parse_solution, serialize_instance, serialize_solution, Instance,
    ParseOptions, Solution, UnitSet,
};
use crate::verify::{audit_run, within_ratio_bound, OptReference};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;
pub const EXIT_TOO_LARGE: i32 = 5;

/// Residual optima for density audits are only computed up to this many
/// positive units.
const DENSITY_UNIT_CEILING: usize = 16;

#[derive(Parser, Debug)]
#[command(
    name = "spidercover",
    version,
    about = "Rooted k-edge-connectivity on quasi-bipartite digraphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate one random instance.
    Gen(GenArgs),
    /// Generate the seeded benchmark corpus into a directory.
    GenCorpus(GenCorpusArgs),
    /// Run the approximation algorithm.
    Solve(SolveArgs),
    /// Compute an exact optimum by branch and bound.
    Brute(BruteArgs),
    /// Check a solution or solve report against its instance.
    Verify(VerifyArgs),
    /// Solve every instance in a directory and compare against exact optima.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct InputArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Drop edges entering the root instead of rejecting the instance.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    QuasiBipartite,
    Augmentation,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub terminals: usize,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    /// Fraction of eligible pairs, e.g. "1/2" or "0.4".
    #[arg(long, default_value = "1/2")]
    pub density: String,
    #[arg(long, default_value_t = 1)]
    pub cost_min: i64,
    #[arg(long, default_value_t = 10)]
    pub cost_max: i64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "quasi-bipartite")]
    pub mode: ModeArg,
    /// Planted zero-cost connectivity in augmentation mode.
    #[arg(long, default_value_t = 1)]
    pub ell: u32,
    #[arg(long, default_value_t = 22)]
    pub max_units: usize,
    #[arg(long, default_value_t = 0)]
    pub zero_edges: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenCorpusArgs {
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub from: u64,
    #[arg(long, default_value_t = 500)]
    pub to: u64,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also report the solution with redundant edges removed.
    #[arg(long)]
    pub prune: bool,
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Args, Debug)]
pub struct BruteArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_UNIT_CEILING)]
    pub max_brute_edges: usize,
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// A solution file or a solve report.
    #[arg(long)]
    pub solution: PathBuf,
    /// Also compute the exact optimum and audit the ratio and densities.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, default_value_t = DEFAULT_UNIT_CEILING)]
    pub max_brute_edges: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub dir: PathBuf,
    /// JSON summary destination; the table goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_UNIT_CEILING)]
    pub max_brute_edges: usize,
    #[arg(long)]
    pub prune: bool,
    #[arg(long)]
    pub no_timestamp: bool,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Malformed(_)
        | Error::InvalidInstance(_)
        | Error::EdgeEntersRoot(_)
        | Error::NegativeCost { .. }
        | Error::TerminalIsRoot(_)
        | Error::BadSelection { .. }
        | Error::NotSupermodular(_)
        | Error::BadParams(_) => EXIT_PARSE,
        Error::Infeasible { .. } | Error::NoPriceableStar(_) => EXIT_INFEASIBLE,
        Error::Invariant(_) => EXIT_VIOLATION,
        Error::TooLarge { .. } | Error::UniverseTooLarge { .. } => EXIT_TOO_LARGE,
        Error::RetryCapExhausted(_) | Error::Io(_) => EXIT_OTHER,
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::GenCorpus(a) => cmd_gen_corpus(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Brute(a) => cmd_brute(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Bench(a) => cmd_bench(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load_instance(input: &InputArgs) -> Result<Instance> {
    let text = fs::read_to_string(&input.instance)?;
    parse_instance_with(
        &text,
        ParseOptions {
            drop_root_edges: input.lenient,
        },
    )
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n"))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn stamped<T: Serialize>(value: &T, no_timestamp: bool) -> String {
    let mut v = serde_json::to_value(value).expect("report serializes");
    if !no_timestamp {
        if let Value::Object(map) = &mut v {
            let secs = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs());
            map.insert("timestamp".into(), Value::from(secs));
        }
    }
    serde_json::to_string_pretty(&v).expect("report serializes")
}

fn cmd_gen(a: &GenArgs) -> Result<i32> {
    let params = GenParams {
        n: a.n,
        terminals: a.terminals,
        k: a.k,
        density: parse_cost(&a.density).map_err(|e| Error::BadParams(e.to_string()))?,
        cost_min: a.cost_min,
        cost_max: a.cost_max,
        seed: a.seed,
        mode: match a.mode {
            ModeArg::QuasiBipartite => GenMode::QuasiBipartite,
            ModeArg::Augmentation => GenMode::Augmentation { ell: a.ell },
        },
        max_units: a.max_units,
        zero_edges: a.zero_edges,
    };
    let inst = generate(&params)?;
    emit(a.out.as_deref(), &serialize_instance(&inst))?;
    Ok(EXIT_OK)
}

fn cmd_gen_corpus(a: &GenCorpusArgs) -> Result<i32> {
    fs::create_dir_all(&a.dir)?;
    for seed in a.from..=a.to {
        let inst = corpus_instance(seed)?;
        fs::write(
            a.dir.join(format!("seed-{seed:04}.json")),
            serialize_instance(&inst) + "\n",
        )?;
    }
    Ok(EXIT_OK)
}

fn cmd_solve(a: &SolveArgs) -> Result<i32> {
    let inst = load_instance(&a.input)?;
    let report = solve_with(&inst, SolveOptions { prune: a.prune })?;
    log::info!("cost {}", report.solution.total_cost);
    emit(a.out.as_deref(), &stamped(&report, a.no_timestamp))?;
    Ok(EXIT_OK)
}

fn cmd_brute(a: &BruteArgs) -> Result<i32> {
    let inst = load_instance(&a.input)?;
    let sol = brute_force_opt(&inst, a.max_brute_edges)?;
    let text = if a.no_timestamp {
        serialize_solution(&sol)
    } else {
        stamped(&sol, false)
    };
    emit(a.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

/// Accepts a solve report, or a bare solution wrapped as a report without
/// phases.
fn load_report(inst: &Instance, path: &Path) -> Result<SolveReport> {
    let text = fs::read_to_string(path)?;
    if let Ok(report) = serde_json::from_str::<SolveReport>(&text) {
        return Ok(report);
    }
    let solution: Solution = parse_solution(&text)?;
    Ok(SolveReport {
        solution,
        phases: Vec::new(),
        claimed_ratio_bound: ClaimedBound::new(
            rooted_max_level(inst, &UnitSet::new()),
            inst.terminals().len(),
        ),
        pruned: None,
    })
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let inst = load_instance(&a.input)?;
    let report = load_report(&inst, &a.solution)?;
    let opt = if a.exact {
        let optimum = brute_force_opt(&inst, a.max_brute_edges)?.total_cost;
        let residual = if inst.positive_units().count() <= DENSITY_UNIT_CEILING {
            Some(residual_optima(&inst, &report, DENSITY_UNIT_CEILING)?)
        } else {
            None
        };
        Some(OptReference {
            optimum,
            residual_optima: residual,
        })
    } else {
        None
    };
    let audit = audit_run(&inst, &report, opt.as_ref())?;
    emit(a.out.as_deref(), &stamped(&audit, a.no_timestamp))?;
    Ok(if !audit.feasible {
        EXIT_INFEASIBLE
    } else if audit.has_violations() {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub file: String,
    pub units: usize,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none", with = "cost::serde_str_opt")]
    pub cost: Option<Cost>,
    #[serde(skip_serializing_if = "Option::is_none", with = "cost::serde_str_opt")]
    pub optimum: Option<Cost>,
    #[serde(skip_serializing_if = "Option::is_none", with = "cost::serde_str_opt")]
    pub ratio: Option<Cost>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_holds: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchSummary {
    pub instances: usize,
    pub solved: usize,
    pub brute_checked: usize,
    pub brute_skipped: usize,
    pub errors: usize,
    pub bound_violations: usize,
    pub ratio_min: Option<f64>,
    pub ratio_mean: Option<f64>,
    pub ratio_max: Option<f64>,
    /// Counts of ratios in [1, 1.1), [1.1, 1.25), [1.25, 1.5), [1.5, 2), [2, ∞).
    pub ratio_histogram: [usize; 5],
    pub rows: Vec<BenchRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

fn bench_one(path: &Path, max_brute: usize, prune: bool) -> BenchRow {
    let file = path
        .file_name()
        .map_or_else(String::new, |f| f.to_string_lossy().into_owned());
    let mut row = BenchRow {
        file,
        units: 0,
        status: String::new(),
        cost: None,
        optimum: None,
        ratio: None,
        bound: None,
        bound_holds: None,
    };
    let inst = match fs::read_to_string(path)
        .map_err(Error::from)
        .and_then(|t| parse_instance_with(&t, ParseOptions::default()))
    {
        Ok(i) => i,
        Err(e) => {
            row.status = format!("error: {e}");
            return row;
        }
    };
    row.units = inst.positive_units().count();
    let report = match solve_with(&inst, SolveOptions { prune }) {
        Ok(r) => r,
        Err(e) => {
            row.status = format!("error: {e}");
            return row;
        }
    };
    let cost = report.solution.total_cost;
    row.cost = Some(cost);
    let bound = &report.claimed_ratio_bound;
    row.bound = Some(bound.interval.upper);
    match brute_force_opt(&inst, max_brute) {
        Ok(opt) => {
            let optimum = opt.total_cost;
            row.optimum = Some(optimum);
            row.ratio = (optimum != Cost::from_integer(0)).then(|| cost / optimum);
            row.bound_holds = Some(within_ratio_bound(
                &cost,
                &optimum,
                bound.levels,
                bound.terminals,
            ));
            row.status = "ok".into();
        }
        Err(Error::TooLarge { .. }) => row.status = "brute skipped".into(),
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

pub fn bench_dir(dir: &Path, max_brute: usize, prune: bool) -> Result<BenchSummary> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let rows: Vec<BenchRow> = files
        .par_iter()
        .map(|p| bench_one(p, max_brute, prune))
        .collect();

    let ratios: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.ratio.as_ref().map(cost::to_f64))
        .collect();
    let mut hist = [0usize; 5];
    for &r in &ratios {
        let bucket = [1.1, 1.25, 1.5, 2.0]
            .iter()
            .position(|&edge| r < edge)
            .unwrap_or(4);
        hist[bucket] += 1;
    }
    Ok(BenchSummary {
        instances: rows.len(),
        solved: rows.iter().filter(|r| r.cost.is_some()).count(),
        brute_checked: rows.iter().filter(|r| r.optimum.is_some()).count(),
        brute_skipped: rows.iter().filter(|r| r.status == "brute skipped").count(),
        errors: rows
            .iter()
            .filter(|r| r.status.starts_with("error"))
            .count(),
        bound_violations: rows.iter().filter(|r| r.bound_holds == Some(false)).count(),
        ratio_min: ratios.iter().copied().reduce(f64::min),
        ratio_mean: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
        ratio_max: ratios.iter().copied().reduce(f64::max),
        ratio_histogram: hist,
        rows,
        wall_seconds: None,
    })
}

pub fn render_table(s: &BenchSummary) -> String {
    let mut out = format!(
        "{:<24} {:>5} {:>10} {:>10} {:>8} {:>8}  {}\n",
        "instance", "units", "cost", "opt", "ratio", "bound", "status"
    );
    let show = |c: &Option<Cost>| c.map_or_else(|| "-".to_string(), |c| c.to_string());
    for r in &s.rows {
        out += &format!(
            "{:<24} {:>5} {:>10} {:>10} {:>8} {:>8}  {}\n",
            r.file,
            r.units,
            show(&r.cost),
            show(&r.optimum),
            r.ratio
                .as_ref()
                .map_or_else(|| "-".into(), |x| format!("{:.3}", cost::to_f64(x))),
            r.bound.map_or_else(|| "-".into(), |b| format!("{b:.3}")),
            r.status
        );
    }
    out += &format!(
        "\n{} instances, {} solved, {} exact, {} brute skipped, {} errors, {} bound violations\n",
        s.instances, s.solved, s.brute_checked, s.brute_skipped, s.errors, s.bound_violations
    );
    if let (Some(lo), Some(mean), Some(hi)) = (s.ratio_min, s.ratio_mean, s.ratio_max) {
        out += &format!("ratio min {lo:.3} mean {mean:.3} max {hi:.3}\n");
        out += &format!(
            "ratio histogram [1,1.1) {} [1.1,1.25) {} [1.25,1.5) {} [1.5,2) {} [2,inf) {}\n",
            s.ratio_histogram[0],
            s.ratio_histogram[1],
            s.ratio_histogram[2],
            s.ratio_histogram[3],
            s.ratio_histogram[4]
        );
    }
    out
}

fn cmd_bench(a: &BenchArgs) -> Result<i32> {
    let start = Instant::now();
    let mut summary = bench_dir(&a.dir, a.max_brute_edges, a.prune)?;
    if !a.no_timestamp {
        summary.wall_seconds = Some(start.elapsed().as_secs_f64());
    }
    let json = stamped(&summary, a.no_timestamp);
    match &a.out {
        Some(p) => fs::write(p, json + "\n")?,
        None => println!("{json}"),
    }
    print!("{}", render_table(&summary));
    Ok(if summary.bound_violations > 0 {
        EXIT_VIOLATION
    } else if summary.errors > 0 {
        EXIT_OTHER
    } else {
        EXIT_OK
    })
}
