//! Command-line front end: load a built-in fixture or a JSON problem file,
//! run the structural analysis, dump volume curves, run verification suites,
//! or propagate fields.
//!
//! Output contract: structured results go to stdout as JSON with sorted keys
//! and floats rounded to 12 significant digits (identical inputs produce
//! byte-identical output); series go to CSV. Exit codes: 0 success, 1 parse
//! or domain error, 2 kernel-condition failure, 3 inconclusive regime,
//! 4 geometry/resolution guard violation.

use crate::gallery::{self, Expected, Fixture};
use crate::gramian::{gramian_at, GramianError, GramianMethod, OperatorSpec};
use crate::grid::{GridSpec, WaveField};
use crate::propagator::{propagate, PropagationMethod, PropagatorError};
use crate::regimes::{
    classify, strichartz_pair, CaseTag, ClassifierConfig, Hypothesis, RegimeError,
};
use crate::structure::analyze_structure;
use crate::verification::{
    run_dispersive_suite, run_group_suite, run_strichartz_suite, run_volume_suite, Probe,
};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// A command failure with its exit code.
#[derive(Debug)]
pub struct CliFailure {
    pub code: i32,
    pub message: String,
}

impl CliFailure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliFailure {
            code,
            message: message.into(),
        }
    }
}

fn classify_gramian_error(e: &GramianError) -> i32 {
    match e {
        GramianError::KernelCondition { .. } => 2,
        _ => 1,
    }
}

fn classify_propagator_error(e: &PropagatorError) -> i32 {
    match e {
        PropagatorError::Geometry { .. }
        | PropagatorError::Support { .. }
        | PropagatorError::Resolution(_) => 4,
        _ => 1,
    }
}

impl From<GramianError> for CliFailure {
    fn from(e: GramianError) -> Self {
        CliFailure::new(classify_gramian_error(&e), e.to_string())
    }
}

impl From<RegimeError> for CliFailure {
    fn from(e: RegimeError) -> Self {
        let code = match e {
            RegimeError::Inconclusive { .. } => 3,
            _ => 1,
        };
        CliFailure::new(code, e.to_string())
    }
}

impl From<PropagatorError> for CliFailure {
    fn from(e: PropagatorError) -> Self {
        CliFailure::new(classify_propagator_error(&e), e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "driftwave",
    about = "Structural invariants, propagator and dispersive-estimate checks for Schrödinger operators with drift",
    version
)]
pub struct Cli {
    /// Worker threads for parallel sections (default: logical cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Built-in fixture id (see `driftwave analyze --fixture help`).
    #[arg(long, conflicts_with = "input")]
    pub fixture: Option<String>,
    /// JSON problem file with n, Q, B row-major arrays.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    /// Points per axis (power of two).
    #[arg(long = "grid-n", default_value_t = 128)]
    pub grid_n: usize,
    /// Box half-widths, one value or comma-separated per axis.
    #[arg(long = "grid-l", alias = "grid-L", default_value = "20")]
    pub grid_l: String,
    /// Guard-band fraction in (0, 0.5).
    #[arg(long, default_value_t = 0.25)]
    pub margin: f64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Structural analysis: kernel condition, ranks, D, spectrum, regime,
    /// critical exponent pair.
    Analyze {
        #[command(flatten)]
        input: InputArgs,
        /// Relative singular-value threshold for rank decisions.
        #[arg(long, default_value_t = 1e-9)]
        rank_tol: f64,
        /// Large-time fit window start for the anomalous tie-break.
        #[arg(long, default_value_t = 50.0)]
        fit_t0: f64,
        /// Large-time fit window end.
        #[arg(long, default_value_t = 500.0)]
        fit_t1: f64,
        /// Samples in the fit window.
        #[arg(long, default_value_t = 64)]
        fit_samples: usize,
    },
    /// Volume curve V(t) with the regime envelopes as CSV.
    Volume {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.1)]
        t0: f64,
        #[arg(long, default_value_t = 10.0)]
        t1: f64,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite; exit 0 iff every check passes.
    Verify {
        #[command(flatten)]
        input: InputArgs,
        /// One of: volume, group, dispersive, strichartz.
        #[arg(long)]
        suite: String,
        #[command(flatten)]
        grid: GridArgs,
        /// Probe Gaussian width.
        #[arg(long, default_value_t = 1.0)]
        probe_sigma: f64,
        /// Spatial exponent r for the admissible pair (strichartz suite);
        /// defaults to the critical pair for the operator's D.
        #[arg(long)]
        pair_r: Option<f64>,
        /// Dispersive window start.
        #[arg(long, default_value_t = 0.1)]
        t0: f64,
        /// Dispersive window end / strichartz time cap.
        #[arg(long, default_value_t = 5.0)]
        t1: f64,
        #[arg(long, default_value_t = 24)]
        samples: usize,
        /// Directory for CSV/JSON artifacts.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Propagation method: sheared-spectral, chirp-interp,
        /// kernel-quadrature.
        #[arg(long, default_value = "sheared-spectral")]
        method: String,
    },
    /// Apply U(t) to a probe or a stored field; writes field files and a norm
    /// CSV.
    Propagate {
        #[command(flatten)]
        input: InputArgs,
        /// Comma-separated list of times.
        #[arg(long, allow_hyphen_values = true)]
        t: String,
        #[command(flatten)]
        grid: GridArgs,
        /// Probe Gaussian width (ignored when --field is given).
        #[arg(long, default_value_t = 1.0)]
        probe_sigma: f64,
        /// Binary field file (with sidecar) to propagate instead of a probe.
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long, default_value = "sheared-spectral")]
        method: String,
        /// Output directory (default: current directory).
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

// ---------------------------------------------------------------------------
// Problem files
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemGrid {
    #[serde(rename = "N")]
    n_points: usize,
    #[serde(rename = "L")]
    half_widths: HalfWidths,
    #[serde(default = "default_margin")]
    margin: f64,
}

fn default_margin() -> f64 {
    0.25
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum HalfWidths {
    Scalar(f64),
    PerAxis(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemExpected {
    ranks: Option<Vec<usize>>,
    #[serde(rename = "D")]
    d: Option<usize>,
    case: Option<String>,
    #[serde(rename = "D_infty")]
    d_infty: Option<f64>,
    #[serde(rename = "Q_infty")]
    q_infty: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    n: usize,
    #[serde(rename = "Q")]
    q: Vec<f64>,
    #[serde(rename = "B")]
    b: Vec<f64>,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    grid: Option<ProblemGrid>,
    #[serde(default)]
    expected: Option<ProblemExpected>,
}

fn case_tag_from_str(s: &str) -> Option<CaseTag> {
    Some(match s {
        "Thm1.3-i" => CaseTag::SpectrumOffAxis,
        "Thm1.3-ii" => CaseTag::ImaginaryFullRank,
        "Thm1.3-iii" => CaseTag::DilationInvariant,
        "Thm1.4" => CaseTag::SkewSimilar,
        "anomalous-A" => CaseTag::AnomalousA,
        "anomalous-B" => CaseTag::AnomalousB,
        _ => return None,
    })
}

/// Parses a problem file into a fixture plus its optional grid. Messages
/// carry the JSON line/column for malformed documents and the offending field
/// for inconsistent ones.
pub fn load_problem(path: &Path) -> Result<(Fixture, Option<GridSpec>), CliFailure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliFailure::new(1, format!("cannot read {}: {e}", path.display())))?;
    let pf: ProblemFile = serde_json::from_str(&text)
        .map_err(|e| CliFailure::new(1, format!("{}: {e}", path.display())))?;
    let n = pf.n;
    if pf.q.len() != n * n {
        return Err(CliFailure::new(
            1,
            format!("field `Q` must hold {} row-major entries, got {}", n * n, pf.q.len()),
        ));
    }
    if pf.b.len() != n * n {
        return Err(CliFailure::new(
            1,
            format!("field `B` must hold {} row-major entries, got {}", n * n, pf.b.len()),
        ));
    }
    let q = nalgebra::DMatrix::from_row_slice(n, n, &pf.q);
    let b = nalgebra::DMatrix::from_row_slice(n, n, &pf.b);
    let label = pf.label.unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "problem".into())
    });
    let spec = OperatorSpec::new(q, b, label).map_err(CliFailure::from)?;

    let mut expected = Expected::default();
    if let Some(e) = pf.expected {
        expected.ranks = e.ranks;
        expected.d = e.d;
        if let Some(c) = &e.case {
            expected.case_tag = Some(case_tag_from_str(c).ok_or_else(|| {
                CliFailure::new(1, format!("field `expected.case`: unknown tag `{c}`"))
            })?);
        }
        expected.d_infty = e.d_infty;
        if let Some(qi) = e.q_infty {
            if qi.len() != n * n {
                return Err(CliFailure::new(
                    1,
                    format!("field `expected.Q_infty` must hold {} entries", n * n),
                ));
            }
            expected.q_infty = Some(nalgebra::DMatrix::from_row_slice(n, n, &qi));
        }
    }
    let grid = match pf.grid {
        None => None,
        Some(g) => {
            let ls = match g.half_widths {
                HalfWidths::Scalar(l) => vec![l; n],
                HalfWidths::PerAxis(v) => v,
            };
            Some(
                GridSpec::new(n.min(3), ls, g.n_points, g.margin)
                    .map_err(|e| CliFailure::new(1, format!("field `grid`: {e}")))?,
            )
        }
    };
    Ok((Fixture { spec, expected }, grid))
}

/// Exports a fixture in the problem-file schema the CLI consumes.
pub fn fixture_to_problem_json(fix: &Fixture) -> Value {
    let n = fix.spec.n();
    let flat = |m: &nalgebra::DMatrix<f64>| -> Vec<f64> {
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m[(i, j)]).collect()
    };
    let mut doc = json!({
        "n": n,
        "Q": flat(fix.spec.q()),
        "B": flat(fix.spec.b()),
        "label": fix.spec.label(),
    });
    let mut expected = serde_json::Map::new();
    if let Some(r) = &fix.expected.ranks {
        expected.insert("ranks".into(), json!(r));
    }
    if let Some(d) = fix.expected.d {
        expected.insert("D".into(), json!(d));
    }
    if let Some(c) = fix.expected.case_tag {
        expected.insert("case".into(), json!(c.as_str()));
    }
    if let Some(di) = fix.expected.d_infty {
        expected.insert("D_infty".into(), json!(di));
    }
    if let Some(qi) = &fix.expected.q_infty {
        expected.insert("Q_infty".into(), json!(flat(qi)));
    }
    if !expected.is_empty() {
        doc["expected"] = Value::Object(expected);
    }
    doc
}

fn resolve_input(input: &InputArgs) -> Result<(Fixture, Option<GridSpec>), CliFailure> {
    match (&input.fixture, &input.input) {
        (Some(name), None) => {
            let fix = gallery::fixture_by_id(name).map_err(|e| CliFailure::new(1, e.to_string()))?;
            Ok((fix, None))
        }
        (None, Some(path)) => load_problem(path),
        _ => Err(CliFailure::new(
            1,
            "exactly one of --fixture NAME or --input FILE is required",
        )),
    }
}

// ---------------------------------------------------------------------------
// Deterministic JSON
// ---------------------------------------------------------------------------

/// Rounds a float to 12 significant digits; keeps output byte-stable across
/// runs and platforms.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let digits = 12i32;
    let magnitude = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - magnitude);
    (x * factor).round() / factor
}

fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    return serde_json::Number::from_f64(round_sig(f))
                        .map(Value::Number)
                        .unwrap_or(Value::Null);
                }
            }
            Value::Number(n)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => {
            // serde_json objects iterate in sorted key order by default.
            Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect())
        }
        other => other,
    }
}

/// Canonical JSON text: sorted keys, floats at 12 significant digits.
pub fn canonical_json(v: Value) -> String {
    serde_json::to_string_pretty(&round_json(v)).expect("json serialization")
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Full structural analysis document for one operator.
pub fn analyze_document(
    fix: &Fixture,
    rank_tol: f64,
    cfg: &ClassifierConfig,
) -> Result<Value, CliFailure> {
    let spec = &fix.spec;
    let structure = analyze_structure(spec, rank_tol)
        .map_err(|e| CliFailure::new(1, e.to_string()))?;
    let regime = classify(spec, &structure, cfg).map_err(CliFailure::from)?;
    let pair = if structure.d >= 2 {
        Some(strichartz_pair(structure.d))
    } else {
        None
    };
    let spectrum: Vec<Value> = regime
        .spectrum
        .eigenvalues
        .iter()
        .map(|e| {
            json!({
                "re": e.re,
                "im": e.im,
                "algebraic": e.algebraic,
                "geometric": e.geometric,
            })
        })
        .collect();
    Ok(json!({
        "label": spec.label(),
        "hoermander": true,
        "ranks": structure.ranks,
        "D": structure.d,
        "dilation_invariant": structure.is_dilation_invariant,
        "trB": spec.tr_b(),
        "spectrum": spectrum,
        "case": regime.case_tag.as_str(),
        "hypothesis": match regime.hypothesis { Hypothesis::A => "A", Hypothesis::B => "B" },
        "D_infty": regime.d_infty,
        "strichartz_pair": pair.map(|p| json!({
            "q": p.q, "r": p.r, "q_dual": p.q_dual, "r_dual": p.r_dual, "beta": p.beta,
        })),
        "pair_r": pair.map(|p| p.r),
    }))
}

/// Volume CSV: t, V, and the two regime envelopes t^D e^{t trB} and
/// min(t^D, t^{D∞}).
pub fn volume_csv(fix: &Fixture, t0: f64, t1: f64, samples: usize) -> Result<String, CliFailure> {
    if !(t0 > 0.0 && t1 > t0 && samples >= 2) {
        return Err(CliFailure::new(1, "need 0 < t0 < t1 and at least 2 samples"));
    }
    let spec = &fix.spec;
    let structure = analyze_structure(spec, 1e-9).map_err(|e| CliFailure::new(1, e.to_string()))?;
    let regime = classify(spec, &structure, &ClassifierConfig::default()).map_err(CliFailure::from)?;
    let d = structure.d as f64;
    let d_infty = regime.d_infty.unwrap_or(d);
    let tr_b = spec.tr_b();
    let mut out = String::from("t,V,hyp_a_envelope,hyp_b_envelope\n");
    for i in 0..samples {
        let a = i as f64 / (samples - 1) as f64;
        let t = (t0.ln() * (1.0 - a) + t1.ln() * a).exp();
        let sample = gramian_at(spec, t, GramianMethod::AugmentedExponential)?;
        let env_a = (d * t.ln() + t * tr_b).exp();
        let env_b = ((d * t.ln()).min(d_infty * t.ln())).exp();
        let _ = writeln!(out, "{t},{},{env_a},{env_b}", sample.v);
    }
    Ok(out)
}

fn parse_method(s: &str) -> Result<PropagationMethod, CliFailure> {
    match s {
        "sheared-spectral" => Ok(PropagationMethod::ShearedSpectral),
        "chirp-interp" => Ok(PropagationMethod::ChirpInterp),
        "kernel-quadrature" => Ok(PropagationMethod::KernelQuadrature),
        other => Err(CliFailure::new(
            1,
            format!("unknown method `{other}`; use sheared-spectral, chirp-interp or kernel-quadrature"),
        )),
    }
}

fn parse_grid(args: &GridArgs, n: usize) -> Result<GridSpec, CliFailure> {
    let ls: Vec<f64> = args
        .grid_l
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliFailure::new(1, format!("cannot parse --grid-l `{}`", args.grid_l)))?;
    let ls = if ls.len() == 1 { vec![ls[0]; n] } else { ls };
    GridSpec::new(n, ls, args.grid_n, args.margin).map_err(|e| CliFailure::new(1, e.to_string()))
}

/// Runs a verification suite; returns (canonical JSON, pass flag).
#[allow(clippy::too_many_arguments)]
pub fn run_suite(
    fix: &Fixture,
    suite: &str,
    grid_args: &GridArgs,
    probe_sigma: f64,
    pair_r: Option<f64>,
    window: (f64, f64),
    samples: usize,
    method: PropagationMethod,
    out_dir: Option<&Path>,
) -> Result<(String, bool), CliFailure> {
    let n = fix.spec.n();
    let mut report = match suite {
        "volume" => run_volume_suite(fix, out_dir),
        "group" => {
            let grid = parse_grid(grid_args, n)?;
            run_group_suite(fix, &grid, &Probe::isotropic(n, probe_sigma), method, out_dir)
        }
        "dispersive" => {
            let grid = parse_grid(grid_args, n)?;
            run_dispersive_suite(
                fix,
                &grid,
                &[4.0, f64::INFINITY],
                &Probe::isotropic(n, probe_sigma),
                window,
                samples,
                method,
                out_dir,
            )
        }
        "strichartz" => {
            let grid = parse_grid(grid_args, n)?;
            let structure =
                analyze_structure(&fix.spec, 1e-9).map_err(|e| CliFailure::new(1, e.to_string()))?;
            if structure.d < 2 {
                return Err(CliFailure::new(1, "space-time pairs need D >= 2"));
            }
            let regime = classify(&fix.spec, &structure, &ClassifierConfig::default())
                .map_err(CliFailure::from)?;
            let pair = match pair_r {
                Some(r) => crate::regimes::admissible_pair(structure.d, r, regime.d_infty)
                    .map_err(CliFailure::from)?,
                None => strichartz_pair(structure.d),
            };
            run_strichartz_suite(
                fix,
                &grid,
                &pair,
                &[0.5, 1.0, 2.0],
                window.1,
                method,
                true,
                out_dir,
            )
        }
        other => {
            return Err(CliFailure::new(
                1,
                format!("unknown suite `{other}`; use volume, group, dispersive or strichartz"),
            ))
        }
    };
    if let Some(dir) = out_dir {
        report
            .write_json(dir)
            .map_err(|e| CliFailure::new(1, format!("cannot write report: {e}")))?;
    }
    let pass = report.pass();
    Ok((canonical_json(report.to_json()), pass))
}

/// Propagates a field (or a probe) to each requested time; writes field
/// binaries plus a norm CSV and returns the CSV text.
pub fn propagate_command(
    fix: &Fixture,
    grid_args: &GridArgs,
    probe_sigma: f64,
    field_path: Option<&Path>,
    ts: &[f64],
    method: PropagationMethod,
    out_dir: &Path,
) -> Result<String, CliFailure> {
    let spec = &fix.spec;
    let phi = match field_path {
        Some(p) => WaveField::read_binary(p).map_err(|e| CliFailure::new(1, e.to_string()))?,
        None => {
            let grid = parse_grid(grid_args, spec.n())?;
            Probe::isotropic(spec.n(), probe_sigma)
                .field(&grid)
                .map_err(|e| CliFailure::new(1, e.to_string()))?
        }
    };
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliFailure::new(1, format!("cannot create {}: {e}", out_dir.display())))?;
    let mut csv = String::from("t,l2_norm,linf_norm\n");
    for (k, &t) in ts.iter().enumerate() {
        let u = propagate(spec, &phi, t, method)?;
        let path = out_dir.join(format!("{}.t{k}.field", spec.label()));
        u.write_binary(&path)
            .map_err(|e| CliFailure::new(1, e.to_string()))?;
        let _ = writeln!(
            csv,
            "{t},{},{}",
            u.l2_norm(),
            u.lebesgue_norm(f64::INFINITY)
        );
    }
    let csv_path = out_dir.join(format!("{}.norms.csv", spec.label()));
    std::fs::write(&csv_path, &csv).map_err(|e| CliFailure::new(1, e.to_string()))?;
    Ok(csv)
}

/// Executes a parsed command line; prints to stdout/stderr and returns the
/// process exit code.
pub fn execute(cli: Cli) -> i32 {
    if let Some(workers) = cli.workers {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    match run_command(cli.command) {
        Ok(output) => {
            print!("{output}");
            0
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn run_command(cmd: Command) -> Result<String, CliFailure> {
    match cmd {
        Command::Analyze {
            input,
            rank_tol,
            fit_t0,
            fit_t1,
            fit_samples,
        } => {
            let (fix, _) = resolve_input(&input)?;
            let cfg = ClassifierConfig {
                fit_t_lo: fit_t0,
                fit_t_hi: fit_t1,
                fit_samples,
                ..ClassifierConfig::default()
            };
            let doc = analyze_document(&fix, rank_tol, &cfg)?;
            Ok(canonical_json(doc) + "\n")
        }
        Command::Volume {
            input,
            t0,
            t1,
            samples,
            out,
        } => {
            let (fix, _) = resolve_input(&input)?;
            let csv = volume_csv(&fix, t0, t1, samples)?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)
                        .map_err(|e| CliFailure::new(1, e.to_string()))?;
                    let path = dir.join(format!("{}.volume.csv", fix.spec.label()));
                    std::fs::write(&path, &csv).map_err(|e| CliFailure::new(1, e.to_string()))?;
                    Ok(format!("wrote {}\n", path.display()))
                }
                None => Ok(csv),
            }
        }
        Command::Verify {
            input,
            suite,
            grid,
            probe_sigma,
            pair_r,
            t0,
            t1,
            samples,
            out,
            method,
        } => {
            let (fix, file_grid) = resolve_input(&input)?;
            let grid = match file_grid {
                Some(g) if input.input.is_some() => GridArgs {
                    grid_n: g.points(),
                    grid_l: g
                        .half_widths()
                        .iter()
                        .map(|l| l.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                    margin: g.margin(),
                },
                _ => grid,
            };
            if let Some(dir) = &out {
                std::fs::create_dir_all(dir).map_err(|e| CliFailure::new(1, e.to_string()))?;
            }
            let method = parse_method(&method)?;
            let (json_text, pass) = run_suite(
                &fix,
                &suite,
                &grid,
                probe_sigma,
                pair_r,
                (t0, t1),
                samples,
                method,
                out.as_deref(),
            )?;
            if pass {
                Ok(json_text + "\n")
            } else {
                // Print the report, then fail.
                print!("{}", json_text + "\n");
                Err(CliFailure::new(1, format!("suite `{suite}` failed")))
            }
        }
        Command::Propagate {
            input,
            t,
            grid,
            probe_sigma,
            field,
            method,
            out,
        } => {
            let (fix, file_grid) = resolve_input(&input)?;
            let grid = match file_grid {
                Some(g) if input.input.is_some() => GridArgs {
                    grid_n: g.points(),
                    grid_l: g
                        .half_widths()
                        .iter()
                        .map(|l| l.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                    margin: g.margin(),
                },
                _ => grid,
            };
            let ts: Vec<f64> = t
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliFailure::new(1, format!("cannot parse --t `{t}`")))?;
            let method = parse_method(&method)?;
            propagate_command(
                &fix,
                &grid,
                probe_sigma,
                field.as_deref(),
                &ts,
                method,
                &out,
            )
        }
    }
}

/// Convenience for tests: analyze a fixture id with default knobs.
pub fn analyze_fixture_id(id: &str) -> Result<Value, CliFailure> {
    let fix = gallery::fixture_by_id(id).map_err(|e| CliFailure::new(1, e.to_string()))?;
    analyze_document(&fix, 1e-9, &ClassifierConfig::default())
}
