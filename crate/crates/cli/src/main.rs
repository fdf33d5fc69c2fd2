use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use splicebound::checks::{
    check_quasi_copula, check_two_increasing, coincidence_criterion, copulahood_criterion, derivative_criterion,
    fill_grid, k_condition_report, m_behavior_scan, matched_grid, merge_coords, phi_simple_report, uniform_coords,
    GridSurface, VerdictReport, CHECK_TOL,
};
use splicebound::oracle::{compare_nodes, default_nodes, lp_dump, mesh, GAP_FLOOR, MAX_KNOTS, MIN_KNOTS};
use splicebound::{builtin, format, load_section, ConfigError, EvalContext, OracleError, SectionPair, SurfaceKind};

const OK: u8 = 0;
const FAIL: u8 = 1;
const INVALID_SECTION: u8 = 2;
const USAGE: u8 = 3;
const EVAL: u8 = 4;
const IO: u8 = 5;
const BOUNDARY_ONLY: u8 = 6;
const SOLVER: u8 = 7;

const MIN_GRID: usize = 2;
const MAX_GRID: usize = 4096;

#[derive(Parser)]
#[command(name = "splicebound", version, about = "Copula bounds with a prescribed curvilinear section")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// JSON section definition
    #[arg(long, conflicts_with = "builtin")]
    config: Option<PathBuf>,
    /// Name of a shipped section
    #[arg(long)]
    builtin: Option<String>,
    /// Tolerance used by the checks
    #[arg(long, default_value_t = CHECK_TOL)]
    tol: f64,
    /// Worker threads; defaults to one per core
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a section and print its summary
    Validate {
        #[command(flatten)]
        src: Source,
    },
    /// Evaluate one surface at one point
    Eval {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        kind: SurfaceKind,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
    },
    /// Export a surface on a grid as CSV
    Grid {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        kind: SurfaceKind,
        /// Points per axis before adding the section knots
        #[arg(long, default_value_t = 101)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one or all decision procedures
    Check {
        #[command(flatten)]
        src: Source,
        #[arg(long, value_enum, default_value_t = Which::All)]
        which: Which,
        /// Scan resolution
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the splice with the checkerboard LP supremum
    Oracle {
        #[command(flatten)]
        src: Source,
        /// Knots per axis of the checkerboard
        #[arg(long, default_value_t = 16)]
        n: usize,
        /// Comma-separated knot indices `a:b`; defaults to curve nodes plus a few interior ones
        #[arg(long)]
        nodes: Option<String>,
        /// Directory receiving one LP listing per node
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run everything and write a report directory
    Report {
        #[command(flatten)]
        src: Source,
        #[arg(long, default_value_t = 48)]
        n: usize,
        /// Checkerboard size for the oracle comparison
        #[arg(long, default_value_t = 16)]
        oracle_n: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Copula,
    Coincidence,
    PhiSimple,
    KCondition,
    Quasi,
    All,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { OK });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Validate { src } => cmd_validate(&src),
        Command::Eval { src, kind, x, y } => {
            let (_, section) = prepare(&src)?;
            let ctx = EvalContext::new(section);
            let v = ctx.surface(kind, x, y).map_err(|e| Failure::new(EVAL, e.to_string()))?;
            println!("{}", format::float(v));
            Ok(OK)
        }
        Command::Grid { src, kind, n, out } => {
            check_grid_size(n)?;
            let (_, section) = prepare(&src)?;
            let csv = grid_csv(&EvalContext::new(section), kind, n)?;
            emit(out.as_deref(), &csv)?;
            Ok(OK)
        }
        Command::Check { src, which, n, out } => {
            check_grid_size(n)?;
            let (_, section) = prepare(&src)?;
            let ctx = EvalContext::new(section);
            let reports = run_checks(&ctx, which, n, src.tol)?;
            let code = verdict_code(reports.iter().map(|(_, r)| r));
            let mut obj = Map::new();
            for (name, r) in reports {
                obj.insert(name.to_string(), to_value(&r));
            }
            if which == Which::All {
                obj.insert("derivative".into(), to_value(&derivative_criterion(ctx.section(), 4 * n)));
            }
            emit(out.as_deref(), &render(&Value::Object(obj)))?;
            Ok(code)
        }
        Command::Oracle { src, n, nodes, dump, out } => {
            let (_, section) = prepare(&src)?;
            let nodes = match nodes {
                Some(spec) => parse_nodes(&spec)?,
                None => default_nodes(n),
            };
            let ctx = EvalContext::new(section);
            let table = oracle_table(&ctx, n, &nodes)?;
            if let Some(dir) = dump {
                fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
                for &(a, b) in &nodes {
                    let text = lp_dump(ctx.section(), n, a, b).map_err(oracle_failure)?;
                    let path = dir.join(format!("lp-{a}-{b}.txt"));
                    fs::write(&path, text).map_err(|e| io_failure(&path, e))?;
                }
            }
            let ok = table["rows"].as_array().is_some_and(|rows| rows.iter().all(|r| r["within_band"] == true));
            emit(out.as_deref(), &render(&table))?;
            Ok(if ok { OK } else { FAIL })
        }
        Command::Report { src, n, oracle_n, out } => cmd_report(&src, n, oracle_n, &out),
    }
}

fn configure_workers(workers: Option<usize>) -> Result<(), Failure> {
    if let Some(w) = workers {
        if w == 0 {
            return Err(Failure::new(USAGE, "--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Failure::new(USAGE, e.to_string()))?;
    }
    Ok(())
}

fn load(src: &Source) -> Result<(String, SectionPair), Failure> {
    let result = match (&src.config, &src.builtin) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            load_section(&text)
        }
        (None, Some(name)) => builtin(name).map(|s| (name.clone(), s)),
        (None, None) => return Err(Failure::new(USAGE, "one of --config or --builtin is required")),
    };
    result.map_err(|e| match e {
        ConfigError::Model(_) => Failure::new(INVALID_SECTION, e.to_string()),
        _ => Failure::new(USAGE, e.to_string()),
    })
}

fn prepare(src: &Source) -> Result<(String, SectionPair), Failure> {
    if !(src.tol > 0.0 && src.tol.is_finite()) {
        return Err(Failure::new(USAGE, "--tol must be positive"));
    }
    configure_workers(src.workers)?;
    load(src)
}

fn check_grid_size(n: usize) -> Result<(), Failure> {
    if (MIN_GRID..=MAX_GRID).contains(&n) {
        Ok(())
    } else {
        Err(Failure::new(USAGE, format!("--n must lie in [{MIN_GRID}, {MAX_GRID}], got {n}")))
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(IO, format!("{}: {e}", path.display()))
}

fn oracle_failure(e: OracleError) -> Failure {
    let code = match e {
        OracleError::KnotCount { .. } | OracleError::Node { .. } => USAGE,
        OracleError::Eval(_) => EVAL,
        _ => SOLVER,
    };
    Failure::new(code, e.to_string())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_failure(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn verdict_code<'a>(reports: impl Iterator<Item = &'a VerdictReport>) -> u8 {
    let mut code = OK;
    for r in reports {
        if !r.passed() {
            return FAIL;
        }
        if r.boundary_only() {
            code = BOUNDARY_ONLY;
        }
    }
    code
}

fn section_summary(name: &str, section: &SectionPair) -> Value {
    json!({
        "breakpoints": section.breakpoints(),
        "gamma_pieces": section.gamma().pieces().len(),
        "hat_breaks": section.hat_breaks(),
        "name": name,
        "phi_pieces": section.phi().function().pieces().len(),
        "resolution": section.resolution(),
        "tilde_breaks": section.tilde_breaks(),
    })
}

fn cmd_validate(src: &Source) -> Outcome {
    match prepare(src) {
        Ok((name, section)) => {
            let mut v = section_summary(&name, &section);
            v["valid"] = json!(true);
            print!("{}", render(&v));
            Ok(OK)
        }
        Err(f) if f.code == INVALID_SECTION => {
            let v = json!({ "error": f.message, "valid": false });
            print!("{}", render(&v));
            Ok(INVALID_SECTION)
        }
        Err(f) => Err(f),
    }
}

/// Uniform `n`-point axes enriched with the section knots; `ys` also hold
/// the curve images of every `x`.
fn export_axes(section: &SectionPair, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = uniform_coords(n - 1);
    xs.extend(section.breakpoints());
    let xs = merge_coords(xs);
    let mut ys = uniform_coords(n - 1);
    ys.extend(xs.iter().map(|&x| section.phi().eval(x)));
    (xs, merge_coords(ys))
}

fn surface_grid(ctx: &EvalContext, kind: SurfaceKind, n: usize) -> Result<GridSurface, Failure> {
    let (xs, ys) = export_axes(ctx.section(), n);
    fill_grid(ctx, kind, xs, ys).map_err(|e| Failure::new(EVAL, e.to_string()))
}

fn csv(g: &GridSurface) -> String {
    let mut s = String::from("x,y,value\n");
    for (i, &x) in g.xs().iter().enumerate() {
        for (j, &y) in g.ys().iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", format::float(x), format::float(y), format::float(g.value(i, j))));
        }
    }
    s
}

fn grid_csv(ctx: &EvalContext, kind: SurfaceKind, n: usize) -> Result<String, Failure> {
    Ok(csv(&surface_grid(ctx, kind, n)?))
}

fn splice_grid(ctx: &EvalContext, n: usize) -> Result<GridSurface, Failure> {
    let (xs, ys) = matched_grid(ctx.section(), n);
    fill_grid(ctx, SurfaceKind::Splice, xs, ys).map_err(|e| Failure::new(EVAL, e.to_string()))
}

fn run_checks(ctx: &EvalContext, which: Which, n: usize, tol: f64) -> Result<Vec<(&'static str, VerdictReport)>, Failure> {
    let section = ctx.section();
    let all = which == Which::All;
    let mut out = Vec::new();
    let grid = if all || matches!(which, Which::Copula | Which::Quasi) {
        Some(splice_grid(ctx, n)?)
    } else {
        None
    };
    if all || which == Which::Copula {
        out.push(("copula", copulahood_criterion(section, n, tol)));
        out.push(("copula_grid", check_two_increasing(grid.as_ref().unwrap(), tol)));
    }
    if all || which == Which::Coincidence {
        out.push(("coincidence", coincidence_criterion(section, n, tol)));
    }
    if all || which == Which::PhiSimple {
        out.push(("phi_simple", phi_simple_report(section, n, tol)));
    }
    if all || which == Which::KCondition {
        out.push(("k_condition", k_condition_report(section, 4 * n, tol)));
    }
    if all || which == Which::Quasi {
        out.push(("quasi", check_quasi_copula(grid.as_ref().unwrap(), tol)));
    }
    Ok(out)
}

fn parse_nodes(spec: &str) -> Result<Vec<(usize, usize)>, Failure> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let bad = || Failure::new(USAGE, format!("node `{item}` is not of the form a:b"));
            let (a, b) = item.trim().split_once(':').ok_or_else(bad)?;
            Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
        })
        .collect()
}

fn oracle_table(ctx: &EvalContext, n: usize, nodes: &[(usize, usize)]) -> Result<Value, Failure> {
    if !(MIN_KNOTS..=MAX_KNOTS).contains(&n) {
        return Err(Failure::new(USAGE, format!("--n must lie in [{MIN_KNOTS}, {MAX_KNOTS}] for the oracle")));
    }
    let rows = compare_nodes(ctx, n, nodes).map_err(oracle_failure)?;
    let m = mesh(ctx.section(), n);
    Ok(json!({
        "band": [GAP_FLOOR, 2.0 * m],
        "mesh": m,
        "n": n,
        "rows": to_value(&rows),
    }))
}

const REPORT_SURFACES: [SurfaceKind; 6] = [
    SurfaceKind::C1,
    SurfaceKind::C2,
    SurfaceKind::Splice,
    SurfaceKind::AUpper,
    SurfaceKind::Bertino,
    SurfaceKind::K,
];

fn cmd_report(src: &Source, n: usize, oracle_n: usize, out: &Path) -> Outcome {
    check_grid_size(n)?;
    let (name, section) = prepare(src)?;
    let ctx = EvalContext::new(section);
    fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;

    let reports = run_checks(&ctx, Which::All, n, src.tol)?;
    let code = verdict_code(reports.iter().map(|(_, r)| r));
    let mut checks = Map::new();
    for (key, r) in &reports {
        checks.insert(key.to_string(), to_value(r));
    }

    let mut grids = Map::new();
    for kind in REPORT_SURFACES {
        let g = surface_grid(&ctx, kind, n)?;
        let file = format!("{}.csv", kind.name());
        let path = out.join(&file);
        fs::write(&path, csv(&g)).map_err(|e| io_failure(&path, e))?;
        grids.insert(kind.name().to_string(), json!(file));
    }

    let splice = splice_grid(&ctx, n)?;
    let m_points = m_behavior_scan(&splice, src.tol);
    let oracle = oracle_table(&ctx, oracle_n, &default_nodes(oracle_n))?;

    let report = json!({
        "checks": Value::Object(checks),
        "derivative": to_value(&derivative_criterion(ctx.section(), 4 * n)),
        "grids": Value::Object(grids),
        "m_behavior": { "count": m_points.len(), "points": m_points },
        "n": n,
        "oracle": oracle,
        "section": section_summary(&name, ctx.section()),
        "tolerance": src.tol,
    });
    let path = out.join("report.json");
    fs::write(&path, render(&report)).map_err(|e| io_failure(&path, e))?;
    Ok(code)
}
