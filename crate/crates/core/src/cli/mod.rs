//! The `hagedorn-kit` command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure (or warnings under
//! `--strict`), 2 invalid input.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::exec::{init_thread_pool, Execution};
use crate::grid::fourier::ALIASING_THRESHOLD;
use crate::grid::{GridFunction, GridSpec, QuadratureRule};
use crate::hagedorn::{generating_eval, hagedorn_tail_bound, packet_eval_all, HagedornBasisSpec, PacketEvaluator, PacketTable};
use crate::symplectic::{LubichResiduals, NormalizedPair, PairFile, TOL_SYMPLECTIC};
use crate::uncertainty::minimal_rotation;
use crate::verify::{self, VerifyConfig};
use crate::{Error, C64};

pub const THREADS_ENV: &str = "HAGEDORN_KIT_THREADS";

#[derive(Parser, Debug)]
#[command(name = "hagedorn-kit", version, about = "Construct, evaluate and verify Hagedorn wave packets")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Tolerance override: parameter validation, or every check in `verify`.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Treat warnings (aliasing, boundary mass) as failures.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Write the result here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Bin,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a parameter file, or the Gram matrix of a quadrature packet table.
    Validate { file: PathBuf },
    /// Evaluate all packets with |n| ≤ N at points, on a grid or at quadrature nodes.
    Eval(EvalArgs),
    /// Run randomized verification suites.
    Verify(VerifyArgs),
    /// Minimal-uncertainty rotation of the ground state.
    Uncertainty { params: PathBuf },
    /// Closed-form generating functions, optionally against the truncated series.
    Genfun(GenfunArgs),
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    pub params: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub order: u32,
    /// JSON array of points or CSV with one point per row.
    #[arg(long, group = "where")]
    pub points: Option<PathBuf>,
    /// `m:L[:c1,…,cd]`, or `auto` for a grid fitted to the packet.
    #[arg(long, group = "where")]
    pub grid: Option<String>,
    /// Nodes per axis of the Gauss–Hermite rule adapted to the packet.
    #[arg(long, group = "where")]
    pub quadrature: Option<usize>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Suite name or `all`.
    pub suite: Option<String>,
    #[arg(long = "suite", conflicts_with = "suite")]
    pub suite_flag: Option<String>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Args, Debug)]
pub struct GenfunArgs {
    pub params: PathBuf,
    /// Components of w, repeated or comma-separated: `--w 0.1+0.2i --w -0.3`.
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub w: Vec<String>,
    /// Comma-separated point.
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub x: String,
    /// Also sum the series over |n| ≤ N and report its error and tail bound.
    #[arg(long)]
    pub order: Option<u32>,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Failed(msg)) => {
            eprintln!("hagedorn-kit: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("hagedorn-kit: {msg}");
            ExitCode::from(2)
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Invalid(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        init_thread_pool(n);
    }
    let g = &cli.global;
    if g.tol.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
        return Err(Failure::Invalid("--tol must be positive".into()));
    }
    if g.format != Format::Json && !matches!(cli.command, Command::Eval(_)) {
        return Err(Failure::Invalid("only eval supports --format csv or bin".into()));
    }
    match &cli.command {
        Command::Validate { file } => validate(g, file),
        Command::Eval(a) => eval(g, a),
        Command::Verify(a) => run_verify(g, a),
        Command::Uncertainty { params } => {
            let pair = load_pair(params, g.tol)?;
            emit(g, minimal_rotation(&pair).to_json() + "\n")
        }
        Command::Genfun(a) => genfun(g, a),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn load_pair(path: &Path, tol: Option<f64>) -> CliResult<NormalizedPair> {
    let text = read(path)?;
    NormalizedPair::from_json_with_tol(&text, tol.unwrap_or(TOL_SYMPLECTIC))
        .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn emit(g: &Global, text: String) -> CliResult<()> {
    emit_bytes(g, text.as_bytes())
}

fn emit_bytes(g: &Global, bytes: &[u8]) -> CliResult<()> {
    match &g.output {
        Some(p) => fs::write(p, bytes)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn warn_or_fail(g: &Global, warnings: &[String]) -> CliResult<()> {
    for w in warnings {
        eprintln!("warning: {w}");
    }
    if g.strict && !warnings.is_empty() {
        return Err(Failure::Failed(format!("{} warning(s) under --strict", warnings.len())));
    }
    Ok(())
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes") + "\n"
}

fn validate(g: &Global, path: &Path) -> CliResult<()> {
    let text = read(path)?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: malformed JSON: {e}", path.display())))?;
    if value.get("indices").is_some() {
        return validate_table(g, &text);
    }
    let file: PairFile =
        serde_json::from_value(value).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    if file.d == 0 {
        return Err(Failure::Invalid("d must be positive".into()));
    }
    let q = file.big_q.to_matrix(file.d, "Q")?;
    let p = file.big_p.to_matrix(file.d, "P")?;
    let residuals = LubichResiduals::of(&q, &p)?;
    let tol = g.tol.unwrap_or(TOL_SYMPLECTIC);
    match file.into_pair(tol) {
        Ok(pair) => {
            let report = json!({
                "valid": true,
                "d": pair.dim(),
                "hbar": pair.hbar(),
                "tolerance": tol,
                "residuals": residuals,
                "symplectic_residual": pair.symplectic().residual(),
            });
            emit(g, pretty(&report))
        }
        Err(e) => {
            let report = json!({ "valid": false, "violated": e.to_string(), "tolerance": tol, "residuals": residuals });
            emit(g, pretty(&report))?;
            Err(Failure::Invalid(e.to_string()))
        }
    }
}

/// A table written by `eval --quadrature` carries its weights; the check is
/// `max |G − I|` for the Gram matrix they define.
fn validate_table(g: &Global, text: &str) -> CliResult<()> {
    let value: Value = serde_json::from_str(text).map_err(|e| Failure::Invalid(e.to_string()))?;
    let weights: Vec<f64> = match value.get("weights") {
        Some(w) => serde_json::from_value(w.clone()).map_err(|e| Failure::Invalid(format!("weights: {e}")))?,
        None => return Err(Failure::Invalid("packet table has no quadrature weights; write it with eval --quadrature".into())),
    };
    let table = PacketTable::from_json(text)?;
    if weights.len() != table.points.len() {
        return Err(Failure::Invalid(format!("{} weights for {} points", weights.len(), table.points.len())));
    }
    let n = table.indices.len();
    let gram = table.gram(&weights);
    let residual = crate::linalg::max_abs_c(&(gram - crate::linalg::CMat::identity(n, n)));
    let tol = g.tol.unwrap_or(1e-8);
    let passed = residual <= tol;
    emit(g, pretty(&json!({ "gram_residual": residual, "tolerance": tol, "passed": passed, "size": n })))?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Failed(format!("Gram matrix differs from the identity by {residual:e}")))
    }
}

/// Points from a JSON array of arrays, or CSV rows; a non-numeric first row is a header.
pub fn read_points(path: &Path, d: usize) -> CliResult<Vec<Vec<f64>>> {
    let text = read(path)?;
    let points: Vec<Vec<f64>> = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?
    } else {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
            let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(r) => rows.push(r),
                Err(_) if k == 0 => continue,
                Err(e) => return Err(Failure::Invalid(format!("{}: row {}: {e}", path.display(), k + 1))),
            }
        }
        rows
    };
    if points.is_empty() {
        return Err(Failure::Invalid(format!("{}: no points", path.display())));
    }
    if let Some(bad) = points.iter().position(|x| x.len() != d || x.iter().any(|v| !v.is_finite())) {
        return Err(Failure::Invalid(format!("point {} must have {d} finite coordinates", bad + 1)));
    }
    Ok(points)
}

fn eval(g: &Global, a: &EvalArgs) -> CliResult<()> {
    let pair = load_pair(&a.params, g.tol)?;
    let d = pair.dim();
    let spec = HagedornBasisSpec::new(pair.clone(), a.order);
    let exec = Execution::default();
    if g.format == Format::Bin && a.grid.is_none() {
        return Err(Failure::Invalid("--format bin needs --grid".into()));
    }
    if let Some(grid) = &a.grid {
        let grid = if grid == "auto" {
            GridSpec::for_pair(&pair)?
        } else {
            GridSpec::parse(grid, d, pair.q().as_slice())?
        };
        return eval_grid(g, &spec, &grid, exec);
    }
    let (points, weights) = match (&a.points, a.quadrature) {
        (Some(p), _) => (read_points(p, d)?, None),
        (None, Some(k)) => {
            if k == 0 {
                return Err(Failure::Invalid("--quadrature needs at least one node".into()));
            }
            let rule = QuadratureRule::adapted(&pair, k)?;
            (rule.points, Some(rule.weights))
        }
        (None, None) => return Err(Failure::Invalid("one of --points, --grid or --quadrature is required".into())),
    };
    let table = packet_eval_all(&spec, &points, exec)?;
    match g.format {
        Format::Csv => emit(g, table.to_csv()),
        _ => {
            let mut v: Value = serde_json::from_str(&table.to_json()).expect("own output parses");
            if let Some(w) = weights {
                v["weights"] = json!(w);
            }
            emit(g, serde_json::to_string(&v).expect("plain data serializes") + "\n")
        }
    }
}

fn eval_grid(g: &Global, spec: &HagedornBasisSpec, grid: &GridSpec, exec: Execution) -> CliResult<()> {
    let ev = PacketEvaluator::new(spec)?;
    let hbar = spec.pair.hbar();
    let samples = GridFunction::sample_many(grid, hbar, ev.set.len(), exec, |x| ev.packets_real(x));
    let worst = samples.iter().map(|f| f.boundary_ratio()).fold(0.0f64, f64::max);
    let mut warnings = Vec::new();
    if worst > ALIASING_THRESHOLD {
        warnings.push(format!("packets reach the grid boundary (max boundary ratio {worst:.1e})"));
    }
    match g.format {
        Format::Bin => {
            // u64 count, then one grid record per multi-index in graded order.
            let mut buf = Vec::new();
            buf.extend_from_slice(&(samples.len() as u64).to_le_bytes());
            for f in &samples {
                f.write_binary(&mut buf)?;
            }
            emit_bytes(g, &buf)?;
        }
        _ => {
            let table = PacketTable {
                d: spec.dim(),
                hbar,
                max_order: spec.max_order,
                points: grid.points(),
                indices: ev.set.indices.clone(),
                values: samples.into_iter().map(|f| f.values).collect(),
            };
            emit(g, if g.format == Format::Csv { table.to_csv() } else { table.to_json() + "\n" })?;
        }
    }
    warn_or_fail(g, &warnings)
}

fn run_verify(g: &Global, a: &VerifyArgs) -> CliResult<()> {
    let suite = a.suite.clone().or_else(|| a.suite_flag.clone()).unwrap_or_else(|| "all".into());
    let mut cfg = VerifyConfig::new(g.seed);
    cfg.d = a.d;
    cfg.trials = a.trials;
    cfg.tol = g.tol;
    let report = verify::run(&suite, &cfg)?;
    emit(g, report.to_json())?;
    if !report.passed {
        let failed: Vec<String> = report
            .suites
            .iter()
            .flat_map(|s| s.checks.iter().filter(|c| !c.passed).map(move |c| format!("{}/{}", s.name, c.name)))
            .collect();
        return Err(Failure::Failed(format!("failed checks: {}", failed.join(", "))));
    }
    let warnings: Vec<String> = report.suites.iter().flat_map(|s| s.warnings.iter().cloned()).collect();
    warn_or_fail(g, &warnings)
}

fn complex_json(z: C64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn genfun(g: &Global, a: &GenfunArgs) -> CliResult<()> {
    let pair = load_pair(&a.params, g.tol)?;
    let d = pair.dim();
    let w: Vec<C64> = a
        .w
        .iter()
        .flat_map(|s| s.split(','))
        .map(|s| s.trim().parse::<C64>().map_err(|_| Failure::Invalid(format!("cannot parse {s:?} as a complex number"))))
        .collect::<CliResult<_>>()?;
    let x: Vec<f64> = a
        .x
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Failure::Invalid(format!("cannot parse {s:?} as a real number"))))
        .collect::<CliResult<_>>()?;
    if w.len() != d || x.len() != d {
        return Err(Failure::Invalid(format!("w and x need {d} components")));
    }
    let spec = HagedornBasisSpec::new(pair, a.order.unwrap_or(0));
    let closed = generating_eval(&spec, &w, &x)?;
    let mut report = json!({
        "w": w.iter().map(|&z| complex_json(z)).collect::<Vec<_>>(),
        "x": x,
        "packets": complex_json(closed.packets),
        "polynomials": complex_json(closed.polynomials),
    });
    if let Some(n) = a.order {
        let ev = PacketEvaluator::new(&spec)?;
        let phi = ev.packets_real(&x);
        let series: C64 = ev.set.indices.iter().zip(&phi).map(|(m, p)| p * m.c_n() * m.power(&w) / m.factorial()).sum();
        let bound = [0.5, 1.0, 1.5, 2.0, 3.0]
            .iter()
            .filter_map(|&r| hagedorn_tail_bound(&spec, n, r, &w, &x).ok())
            .fold(f64::INFINITY, f64::min);
        report["series"] = json!({
            "order": n,
            "value": complex_json(series),
            "error": (series - closed.packets).norm(),
            "tail_bound": if bound.is_finite() { json!(bound) } else { Value::Null },
        });
    }
    emit(g, pretty(&report))
}
