//! Command-line front end. `run` parses argv, dispatches, writes the
//! report to `out` and returns the process exit code: 0 on success, 2 when
//! the data falsify the model, 1 on any error (with a JSON error object).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::bounds::{falsify, falsify_helly, plugin_bounds, simulate_falsification, Status};
use crate::dataset::{empirical_distributions, Dataset, Variable};
use crate::dims::Dims;
use crate::error::{Error, Result};
use crate::functional::LinearFunctional;
use crate::inequality::{enumerate_full, nonredundant_system, InequalitySystem};
use crate::inference::{chernoff_spec, intervals_at, CiConfig};
use crate::oracle;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FALSIFIED: i32 = 2;

const DROP_X_WARNING: &str =
    "--drop-x conditions on the received treatment; the reduced data generally violate the IV assumptions";

#[derive(Debug, Parser)]
#[command(
    name = "ivpoly",
    version,
    about = "Bounds, falsification and confidence intervals for categorical IV models"
)]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sharp plug-in bounds on linear functionals of the counterfactual distribution.
    Bounds(BoundsArgs),
    /// Simultaneous finite-sample confidence intervals.
    Ci(CiArgs),
    /// Whether any counterfactual distribution is compatible with the data.
    Falsify(FalsifyArgs),
    /// Exact-arithmetic consistency checks of the inequality system.
    Audit(AuditArgs),
    /// Falsification rate of uniformly random observed arms.
    Simulate(SimulateArgs),
    /// Export the matrices H' and H.
    Matrices(MatricesArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Counts as CSV (z,x,y,count) or JSON.
    input: PathBuf,
    /// Remove an instrument arm before analysis (label, prefix or 1-based level).
    #[arg(long = "drop-z", value_name = "LEVEL")]
    drop_z: Vec<String>,
    /// Remove a treatment level before analysis.
    #[arg(long = "drop-x", value_name = "LEVEL")]
    drop_x: Vec<String>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Functional, e.g. `ate(Separate,Arrest,2)`; repeatable.
    #[arg(short = 'f', long = "functional", required = true)]
    functionals: Vec<String>,
}

#[derive(Debug, Args)]
struct CiArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(short = 'f', long = "functional", required = true)]
    functionals: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 500)]
    max_cut_rounds: usize,
    #[arg(long, default_value_t = 1e-7)]
    tol_kl: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol_obj: f64,
}

#[derive(Debug, Args)]
struct FalsifyArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Decide through feasibility of small subsets of arms.
    #[arg(long)]
    helly: bool,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(short = 'k', long, default_value_t = 2)]
    k: usize,
    #[arg(short = 'm', long, default_value_t = 2)]
    m: usize,
    #[arg(short = 'q', long, default_value_t = 1)]
    q: usize,
    /// Random pairs for the Strassen agreement check.
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the per-row LP audit as JSON.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(short = 'k', long, default_value_t = 2)]
    k: usize,
    #[arg(short = 'm', long, default_value_t = 2)]
    m: usize,
    #[arg(short = 'q', long, default_value_t = 2)]
    q: usize,
    /// Sweep arm counts from `q` to this value.
    #[arg(long)]
    q_max: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write `q,proportion` pairs as CSV.
    #[arg(long, value_name = "PATH")]
    curve: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MatricesArgs {
    #[arg(short = 'k', long)]
    k: usize,
    #[arg(short = 'm', long)]
    m: usize,
    #[arg(short = 'q', long, default_value_t = 1)]
    q: usize,
    /// Every nontrivial row instead of the non-redundant ones.
    #[arg(long)]
    full: bool,
}

/// A finished command: its report, rows for table/csv output, exit code.
struct Report {
    json: Value,
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    /// Lines printed before the table.
    preamble: Vec<String>,
    /// Table mode prints the cells without a header.
    plain: bool,
    warnings: Vec<String>,
    code: i32,
}

enum Cell {
    Text(String),
    Num(f64),
}

impl Cell {
    fn render(&self, format: Format) -> String {
        match (self, format) {
            (Cell::Text(s), _) => s.clone(),
            (Cell::Num(v), Format::Table) => significant(*v, 6),
            (Cell::Num(v), _) => full_precision(*v),
        }
    }
}

fn full_precision(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        v.to_string()
    }
}

/// `v` to `digits` significant digits, trailing zeros trimmed.
pub fn significant(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return full_precision(v);
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..15).contains(&exp) {
        let s = format!("{:.*e}", digits - 1, v);
        let (mant, e) = s.split_once('e').expect("exponent");
        return format!("{}e{e}", trim(mant));
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim(&format!("{v:.decimals$}"))
}

fn trim(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Parses `args` (including the program name), runs the command and
/// writes its output. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let body = json!({"error": {"kind": "usage", "message": e.to_string().trim_end()}});
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&body).expect("json"));
            return EXIT_ERROR;
        }
    };
    let format = cli.format;
    match dispatch(cli.command) {
        Ok(report) => {
            for w in &report.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            let written = match format {
                Format::Json => writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&report.json).expect("json")
                ),
                Format::Table | Format::Csv => write_rows(out, &report, format),
            };
            if written.is_err() {
                return EXIT_ERROR;
            }
            report.code
        }
        Err(e) => {
            let body = json!({"error": {"kind": e.kind(), "message": e.to_string()}});
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&body).expect("json"));
            EXIT_ERROR
        }
    }
}

fn write_rows(out: &mut impl Write, report: &Report, format: Format) -> std::io::Result<()> {
    let rendered: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| r.iter().map(|c| c.render(format)).collect())
        .collect();
    if format == Format::Csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&report.header).map_err(std::io::Error::other)?;
        for r in &rendered {
            w.write_record(r).map_err(std::io::Error::other)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        return out.write_all(&bytes);
    }
    for line in &report.preamble {
        writeln!(out, "{line}")?;
    }
    if report.plain {
        for r in &rendered {
            writeln!(out, "{}", r.join("  "))?;
        }
        return Ok(());
    }
    let mut widths: Vec<usize> = report.header.iter().map(|h| h.len()).collect();
    for r in &rendered {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    writeln!(out, "{}", line(report.header.clone()))?;
    for r in &rendered {
        writeln!(out, "{}", line(r.iter().map(String::as_str).collect()))?;
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<Report> {
    match command {
        Command::Bounds(a) => bounds(a),
        Command::Ci(a) => ci(a),
        Command::Falsify(a) => falsify_cmd(a),
        Command::Audit(a) => audit(a),
        Command::Simulate(a) => simulate(a),
        Command::Matrices(a) => matrices(a),
    }
}

/// Loads the dataset and applies the requested surgeries in order.
fn load(args: &DataArgs) -> Result<(Dataset, Vec<String>)> {
    let mut ds = Dataset::from_path(&args.input)?;
    let mut warnings = Vec::new();
    for token in &args.drop_z {
        let z = ds.resolve_level(Variable::Z, token)?;
        ds = ds.drop_arm(z)?;
    }
    if !args.drop_x.is_empty() {
        warnings.push(DROP_X_WARNING.to_string());
    }
    for token in &args.drop_x {
        let x = ds.resolve_level(Variable::X, token)?;
        ds = ds.drop_treatment(x)?;
    }
    Ok((ds, warnings))
}

fn parse_functionals(texts: &[String], ds: &Dataset) -> Result<Vec<LinearFunctional>> {
    texts
        .iter()
        .map(|t| LinearFunctional::parse(t, &ds.dims(), ds.labels()))
        .collect()
}

fn dims_json(d: &Dims) -> Value {
    json!({"Q": d.q(), "K": d.k(), "M": d.m()})
}

fn data_json(args: &DataArgs, ds: &Dataset) -> Value {
    json!({
        "input": args.input.display().to_string(),
        "dims": dims_json(&ds.dims()),
        "arm_sizes": ds.arm_sizes(),
        "drop_z": args.drop_z,
        "drop_x": args.drop_x,
    })
}

fn bounds(a: BoundsArgs) -> Result<Report> {
    let (ds, mut warnings) = load(&a.data)?;
    let fs = parse_functionals(&a.functionals, &ds)?;
    let sys = nonredundant_system(&ds.dims())?;
    let observed = empirical_distributions(&ds)?;
    let results = fs
        .iter()
        .map(|f| plugin_bounds(&sys, &observed, f))
        .collect::<Result<Vec<_>>>()?;
    let falsified = results.iter().any(|r| r.status == Status::Infeasible);
    for r in &results {
        warnings.extend(r.warnings.iter().map(|w| format!("{}: {w}", r.functional)));
    }
    let json = json!({
        "command": "bounds",
        "data": data_json(&a.data, &ds),
        "status": if falsified { Status::Infeasible } else { Status::Feasible },
        "results": results.iter().map(|r| r.to_json_value()).collect::<Vec<_>>(),
        "warnings": warnings,
    });
    Ok(Report {
        json,
        header: vec!["functional", "lower", "upper", "status"],
        rows: results
            .iter()
            .map(|r| {
                vec![
                    Cell::Text(r.functional.clone()),
                    Cell::Num(r.lower),
                    Cell::Num(r.upper),
                    Cell::Text(r.status.to_string()),
                ]
            })
            .collect(),
        preamble: Vec::new(),
        plain: false,
        warnings,
        code: if falsified { EXIT_FALSIFIED } else { EXIT_OK },
    })
}

fn ci(a: CiArgs) -> Result<Report> {
    let (ds, warnings) = load(&a.data)?;
    let fs = parse_functionals(&a.functionals, &ds)?;
    let sys = nonredundant_system(&ds.dims())?;
    let config = CiConfig {
        alpha: a.alpha,
        max_cut_rounds: a.max_cut_rounds,
        tol_kl: a.tol_kl,
        tol_obj: a.tol_obj,
    };
    let critical = chernoff_spec(&ds, a.alpha)?.find_t_alpha()?;
    let intervals = intervals_at(&sys, &ds, &fs, &config, &critical)?;
    let falsified = intervals.iter().any(|c| c.falsified);
    let json = json!({
        "command": "ci",
        "data": data_json(&a.data, &ds),
        "alpha": a.alpha,
        "t_alpha": critical.t_alpha,
        "lambda_star": critical.lambda_star,
        "achieved_rhs": critical.achieved_rhs,
        "falsified": falsified,
        "intervals": intervals.iter().map(|c| c.to_json_value()).collect::<Vec<_>>(),
        "warnings": warnings,
    });
    Ok(Report {
        json,
        header: vec!["functional", "lower", "upper"],
        rows: intervals
            .iter()
            .map(|c| {
                vec![
                    Cell::Text(c.functional.clone()),
                    Cell::Num(c.lower),
                    Cell::Num(c.upper),
                ]
            })
            .collect(),
        preamble: vec![
            format!("alpha    {}", significant(a.alpha, 6)),
            format!("t_alpha  {}", significant(critical.t_alpha, 6)),
            format!("lambda*  {}", significant(critical.lambda_star, 6)),
        ],
        plain: false,
        warnings,
        code: if falsified { EXIT_FALSIFIED } else { EXIT_OK },
    })
}

fn falsify_cmd(a: FalsifyArgs) -> Result<Report> {
    let (ds, warnings) = load(&a.data)?;
    let sys = nonredundant_system(&ds.dims())?;
    let observed = empirical_distributions(&ds)?;
    let status = if a.helly {
        falsify_helly(&sys, &observed)?
    } else {
        falsify(&sys, &observed)?
    };
    let json = json!({
        "command": "falsify",
        "data": data_json(&a.data, &ds),
        "status": status,
        "warnings": warnings,
    });
    Ok(Report {
        json,
        header: vec!["status"],
        rows: vec![vec![Cell::Text(status.to_string())]],
        preamble: Vec::new(),
        plain: true,
        warnings,
        code: if status == Status::Infeasible {
            EXIT_FALSIFIED
        } else {
            EXIT_OK
        },
    })
}

struct Check {
    name: &'static str,
    outcome: Option<bool>,
    detail: String,
}

fn skipped(name: &'static str, e: &Error) -> Check {
    Check {
        name,
        outcome: None,
        detail: e.to_string(),
    }
}

fn audit(a: AuditArgs) -> Result<Report> {
    let dims = Dims::new(a.q, a.k, a.m)?;
    let sys = nonredundant_system(&dims)?;
    let mut checks = Vec::new();

    let rel = oracle::build_coherence(&dims);
    let expected = dims.k() * dims.strata();
    checks.push(Check {
        name: "coherence_edges",
        outcome: Some(rel.edges.len() == expected),
        detail: format!("{} edges, expected {expected}", rel.edges.len()),
    });

    checks.push(match oracle::edge_redundancy_table(&dims) {
        Ok(table) => {
            let mismatches = table
                .iter()
                .filter(|(f, redundant)| *redundant == f.is_nonredundant(dims.m()))
                .count();
            Check {
                name: "redundancy_predicate",
                outcome: Some(mismatches == 0),
                detail: format!("{} families, {mismatches} mismatches", table.len()),
            }
        }
        Err(e) => skipped("redundancy_predicate", &e),
    });

    let mut lp_entries = Value::Null;
    checks.push(match oracle::lp_redundancy_audit(&sys) {
        Ok(report) => {
            lp_entries = report.to_json_value()["entries"].clone();
            if let Some(path) = &a.report {
                std::fs::write(path, serde_json::to_string_pretty(&lp_entries)?)?;
            }
            Check {
                name: "lp_redundancy",
                outcome: Some(report.consistent()),
                detail: format!(
                    "{} kept rows non-redundant, {} dropped rows redundant, {} entries",
                    report.count(true, oracle::Verdict::NonRedundant),
                    report.count(false, oracle::Verdict::Redundant),
                    report.entries.len()
                ),
            }
        }
        Err(e @ Error::SizeOverflow { .. }) => skipped("lp_redundancy", &e),
        Err(e) => return Err(e),
    });

    checks.push(if dims.k() == 2 && dims.m() == 2 && dims.q() <= 2 {
        let r = oracle::vertex_facet_check(&sys)?;
        Check {
            name: "vertex_facet",
            outcome: Some(r.consistent()),
            detail: format!(
                "{} vertices, {}/{} rows facet-defining, {}/{} hull facets implied",
                r.vertices, r.facet_rows, r.rows, r.hull_facets_valid, r.hull_facets
            ),
        }
    } else {
        Check {
            name: "vertex_facet",
            outcome: None,
            detail: "only run at K=M=2 with at most two arms".into(),
        }
    });

    checks.push(match oracle::strassen_agreement(&dims, a.draws, a.seed) {
        Ok(r) => Check {
            name: "strassen_agreement",
            outcome: Some(r.agree == r.draws),
            detail: format!("{}/{} agree, {} feasible", r.agree, r.draws, r.feasible),
        },
        Err(e @ Error::SizeOverflow { .. }) => skipped("strassen_agreement", &e),
        Err(e) => return Err(e),
    });

    let passed = checks.iter().all(|c| c.outcome != Some(false));
    let status = |c: &Check| match c.outcome {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "skipped",
    };
    let json = json!({
        "command": "audit",
        "dims": dims_json(&dims),
        "passed": passed,
        "checks": checks
            .iter()
            .map(|c| json!({"name": c.name, "status": status(c), "detail": c.detail}))
            .collect::<Vec<_>>(),
        "lp_audit": lp_entries,
    });
    Ok(Report {
        json,
        header: vec!["check", "status", "detail"],
        rows: checks
            .iter()
            .map(|c| {
                vec![
                    Cell::Text(c.name.into()),
                    Cell::Text(status(c).into()),
                    Cell::Text(c.detail.clone()),
                ]
            })
            .collect(),
        preamble: Vec::new(),
        plain: false,
        warnings: Vec::new(),
        code: if passed { EXIT_OK } else { EXIT_ERROR },
    })
}

fn simulate(a: SimulateArgs) -> Result<Report> {
    let q_max = a.q_max.unwrap_or(a.q);
    if q_max < a.q {
        return Err(Error::DomainError(format!("--q-max {q_max} below --q {}", a.q)));
    }
    let mut curve = Vec::new();
    for q in a.q..=q_max {
        let dims = Dims::new(q, a.k, a.m)?;
        curve.push((q, simulate_falsification(&dims, a.draws, a.seed)?));
    }
    if let Some(path) = &a.curve {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["q", "proportion"])?;
        for (q, p) in &curve {
            w.write_record([q.to_string(), p.to_string()])?;
        }
        w.flush()?;
    }
    let json = json!({
        "command": "simulate",
        "k": a.k,
        "m": a.m,
        "draws": a.draws,
        "seed": a.seed,
        "curve": curve.iter().map(|(q, p)| json!({"q": q, "proportion": p})).collect::<Vec<_>>(),
    });
    Ok(Report {
        json,
        header: vec!["q", "proportion"],
        rows: curve
            .iter()
            .map(|(q, p)| vec![Cell::Text(q.to_string()), Cell::Num(*p)])
            .collect(),
        preamble: Vec::new(),
        plain: false,
        warnings: Vec::new(),
        code: EXIT_OK,
    })
}

fn matrices(a: MatricesArgs) -> Result<Report> {
    let dims = Dims::new(a.q, a.k, a.m)?;
    let sys: InequalitySystem = if a.full {
        enumerate_full(&dims)?
    } else {
        nonredundant_system(&dims)?
    };
    let mut json = sys.to_json_value();
    json["command"] = "matrices".into();
    let render = |bits: &[u8]| bits.iter().map(|b| b.to_string()).collect::<String>();
    Ok(Report {
        json,
        header: vec!["row", "family", "h_prime", "h"],
        rows: sys
            .rows()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                vec![
                    Cell::Text((i + 1).to_string()),
                    Cell::Text(r.family.to_string()),
                    Cell::Text(render(&r.lhs.to_dense())),
                    Cell::Text(render(&r.rhs.to_dense())),
                ]
            })
            .collect(),
        preamble: vec![format!("{} rows per arm for {dims}", sys.len())],
        plain: false,
        warnings: Vec::new(),
        code: EXIT_OK,
    })
}

/// Shorthand for tests and examples: runs `args` and captures stdout.
pub fn run_captured(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("ivpoly").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8_lossy(&out).into_owned(),
        String::from_utf8_lossy(&err).into_owned(),
    )
}
