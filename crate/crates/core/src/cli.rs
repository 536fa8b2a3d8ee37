//! The `qdeform` command-line tool.
//!
//! Every command prints a JSON [`Report`] (to stdout or `--report`) and
//! exits 0 when all checks pass, 1 when a check fails or a computation
//! breaks down, and 2 on usage errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::builtins::{builtin, Builtin};
use crate::chart::ChartKind;
use crate::dirac::{build_constraints, verify_reduction, OmegaBarMethod};
use crate::error::{Error, Result};
use crate::expr::parse_poly;
use crate::flow::{integrate, measure_frequency, FlowConfig};
use crate::fock::{
    classical_identity_residual, classical_limit_scan, multimode_with, relation_residuals, Algebra,
    Dressing,
};
use crate::kahler::KahlerModel;
use crate::ncalg::{system, NCPoly, Params, RewriteSystem};
use crate::poisson::{Beta, PoissonStructure};
use crate::poly::PolyExpr;
use crate::report::Report;
use crate::scalar::{format_rational, parse_rational, rational_from_f64, Rational, Scalar};
use crate::serial::{structure_from_str, structure_to_string};

#[derive(Debug, Parser)]
#[command(name = "qdeform", version, about = "Checks for quadratic Poisson structures and their quantizations")]
pub struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Symbolic Jacobi identity and Casimir checks.
    VerifyJacobi(JacobiArgs),
    /// Integrate a Hamiltonian flow and monitor invariants.
    Flow(FlowArgs),
    /// Metric and curvature of the dilogarithm Kähler potential.
    Kahler(KahlerArgs),
    /// Dirac-bracket reduction of a constraint embedding.
    Dirac {
        #[command(subcommand)]
        action: DiracCommand,
    },
    /// Normal-ordering rule systems.
    Ncalg {
        #[command(subcommand)]
        action: NcalgCommand,
    },
    /// Truncated Fock-space checks.
    Fock {
        #[command(subcommand)]
        action: FockCommand,
    },
}

#[derive(Debug, Args)]
pub struct StructureArgs {
    /// Built-in name (`canonical`, `qosc1`, `qparticle`, `lattice`, `suqn`,
    /// `diag`, or `suqn(3)` style) or a path to a structure JSON file.
    #[arg(long)]
    pub structure: String,
    /// Mode count for `canonical`, `suqn` and `diag`.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Deformation parameter as `p/q` or a decimal; omitted means symbolic
    /// where allowed.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
}

#[derive(Debug, Args)]
pub struct JacobiArgs {
    #[command(flatten)]
    pub structure: StructureArgs,
    /// Extra Casimir candidates to check (expressions).
    #[arg(long)]
    pub casimir: Vec<String>,
    /// Write the structure JSON to this path.
    #[arg(long)]
    pub emit: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub structure: StructureArgs,
    /// Hamiltonian expression.
    #[arg(long = "H")]
    pub hamiltonian: String,
    /// Initial value of the first holomorphic coordinate (its partner is
    /// set to the conjugate).
    #[arg(long)]
    pub b0: Option<String>,
    /// Initial values as `name=value` pairs separated by commas.
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long, default_value_t = 10.0)]
    pub t: f64,
    #[arg(long, default_value_t = 1001)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-14)]
    pub atol: f64,
    /// Tolerance for the energy and Casimir drift checks.
    #[arg(long, default_value_t = 1e-8)]
    pub drift_tol: f64,
    /// Trajectory CSV output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trajectory JSON output.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KahlerArgs {
    #[arg(long, default_value_t = 1)]
    pub modes: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: f64,
    /// Random points for the metric and curvature checks.
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Radial grid `start:stop:count` in `|z|²` (every mode set to the
    /// same real value).
    #[arg(long)]
    pub grid: Option<String>,
    /// CSV output for the grid table.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Single point, one complex expression per mode separated by `;`.
    #[arg(long)]
    pub point: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum DiracCommand {
    /// Compare Dirac brackets of coordinates with the bivector.
    Verify(DiracArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Closed form when available, quadrature otherwise.
    Auto,
    Closed,
    Quadrature,
}

#[derive(Debug, Args)]
pub struct DiracArgs {
    #[command(flatten)]
    pub structure: StructureArgs,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 1e-13)]
    pub quad_tol: f64,
    /// Half-width of the sampling box; defaults to `sqrt(|beta|)/2`.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Full per-point reduction report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum NcalgCommand {
    /// Jacobi, relation and confluence checks for a rule system.
    Check(NcalgArgs),
}

#[derive(Debug, Args)]
pub struct NcalgArgs {
    /// `eq1`, `eq5`, `eq5-wrong`, `canonical` or `qparticle`.
    #[arg(long, required_unless_present = "file")]
    pub system: Option<String>,
    /// Rule system JSON file.
    #[arg(long, conflicts_with = "system")]
    pub file: Option<PathBuf>,
    #[arg(long, default_value = "1/10")]
    pub hbar: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub beta: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random inputs for the confluence check.
    #[arg(long, default_value_t = 200)]
    pub corpus: usize,
    /// Write the rule system JSON to this path.
    #[arg(long)]
    pub emit: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgebraArg {
    Eq1,
    Suqn,
}

#[derive(Debug, Subcommand)]
pub enum FockCommand {
    /// Interior residuals of the oscillator relations.
    Residuals(FockResidualArgs),
    /// Classical-limit scan of the level energies.
    Limit(FockLimitArgs),
}

#[derive(Debug, Args)]
pub struct FockResidualArgs {
    #[arg(long, value_enum)]
    pub algebra: AlgebraArg,
    #[arg(long, default_value_t = 1)]
    pub modes: usize,
    #[arg(long, default_value_t = 10)]
    pub trunc: usize,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub hbar: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Use undressed modes (negative control).
    #[arg(long)]
    pub undressed: bool,
}

#[derive(Debug, Args)]
pub struct FockLimitArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long)]
    pub action: f64,
    /// Uses `hbar = 2^-k` for `k = 2..=steps`.
    #[arg(long, default_value_t = 12)]
    pub steps: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(report) => {
            let text = match report.to_json() {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return 1;
                }
            };
            let written = match &cli.report {
                Some(path) => fs::write(path, format!("{text}\n")).map_err(|e| e.to_string()),
                None => writeln!(std::io::stdout(), "{text}").map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return 2;
            }
            if report.passed() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Input problems are usage errors; breakdowns of a computation are check
/// failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Symbol(_)
        | Error::Parameter(_)
        | Error::Domain(_)
        | Error::Size(_)
        | Error::Syntax { .. }
        | Error::Format(_) => 2,
        _ => 1,
    }
}

pub fn execute(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::VerifyJacobi(a) => verify_jacobi(a),
        Command::Flow(a) => flow(a),
        Command::Kahler(a) => kahler(a),
        Command::Dirac {
            action: DiracCommand::Verify(a),
        } => dirac(a),
        Command::Ncalg {
            action: NcalgCommand::Check(a),
        } => ncalg(a),
        Command::Fock {
            action: FockCommand::Residuals(a),
        } => fock_residuals(a),
        Command::Fock {
            action: FockCommand::Limit(a),
        } => fock_limit(a),
    }
}

/// `p/q`, an integer, or a decimal (converted exactly).
pub fn parse_number(text: &str) -> Result<Rational> {
    parse_rational(text).or_else(|_| {
        let x: f64 = text
            .trim()
            .parse()
            .map_err(|_| Error::Parameter(format!("not a number: `{text}`")))?;
        rational_from_f64(x)
    })
}

fn load_structure(a: &StructureArgs, need_beta: bool) -> Result<PoissonStructure> {
    let beta = match &a.beta {
        Some(b) => Some(parse_number(b)?),
        None if need_beta => {
            return Err(Error::Parameter("--beta is required for this command".into()))
        }
        None => None,
    };
    let parsed = if a.structure.contains('(') {
        a.structure.parse::<Builtin>()
    } else {
        Builtin::parse(&a.structure, a.n)
    };
    let s = match parsed {
        Ok(b) => builtin(b, Beta::Symbolic)?,
        Err(_) => {
            let path = Path::new(&a.structure);
            if !path.exists() {
                return Err(Error::Parameter(format!(
                    "`{}` is neither a built-in structure nor a file",
                    a.structure
                )));
            }
            let text = fs::read_to_string(path).map_err(|e| Error::Format(e.to_string()))?;
            structure_from_str(&text)?
        }
    };
    match beta {
        Some(b) => s.with_beta(b),
        None => Ok(s),
    }
}

fn structure_params(r: &mut Report, s: &PoissonStructure) {
    r.param("structure", s.name.clone());
    r.param("beta", s.beta().to_string());
}

fn verify_jacobi(a: &JacobiArgs) -> Result<Report> {
    let s = load_structure(&a.structure, false)?;
    let mut r = Report::new("verify-jacobi");
    structure_params(&mut r, &s);
    r.check("antisymmetry", if s.is_antisymmetric() { 0.0 } else { 1.0 }, 0.0);
    let residual = s.jacobi_residual();
    let nonzero: Vec<_> = residual.iter().filter(|t| !t.residual.is_zero()).collect();
    r.check("jacobi_nonzero_components", nonzero.len() as f64, 0.0);
    if !nonzero.is_empty() {
        let shown: Vec<String> = nonzero
            .iter()
            .map(|t| format!("{:?}: {}", t.indices, t.residual))
            .collect();
        r.detail("jacobi_residual", shown);
    }
    let mut casimirs: Vec<(String, PolyExpr)> = s
        .casimirs()
        .iter()
        .enumerate()
        .map(|(k, c)| (format!("casimir[{k}]"), c.clone()))
        .collect();
    for (k, text) in a.casimir.iter().enumerate() {
        casimirs.push((format!("casimir_arg[{k}]"), parse_poly(text)?));
    }
    for (name, c) in casimirs {
        let ok = s.casimir_check(&c)?;
        r.check(&name, if ok { 0.0 } else { 1.0 }, 0.0);
    }
    if let Some(path) = &a.emit {
        fs::write(path, structure_to_string(&s)?).map_err(|e| Error::Format(e.to_string()))?;
    }
    Ok(r)
}

/// Complex constant: an expression (`1/2 - 3/4i`) or a decimal literal
/// (`0.1`, `0.1+0.2i`, `-2.5e-1i`).
pub fn parse_constant(text: &str) -> Result<Complex64> {
    if let Some(z) = parse_decimal_complex(text.trim()) {
        return Ok(z);
    }
    let p = parse_poly(text)?;
    p.as_constant()
        .map(|c| c.to_c64())
        .ok_or_else(|| Error::Parameter(format!("`{text}` is not a constant")))
}

fn initial_state(s: &PoissonStructure, a: &FlowArgs) -> Result<Vec<Complex64>> {
    let chart = s.chart();
    let n = chart.dim();
    let mut state: Vec<Option<Complex64>> = vec![None; n];
    if let Some(b0) = &a.b0 {
        let i = (0..n)
            .find(|&i| chart.conjugation()[i] > i)
            .ok_or_else(|| Error::Parameter("--b0 needs a holomorphic pair in the chart".into()))?;
        let z = parse_constant(b0)?;
        state[i] = Some(z);
        state[chart.conjugation()[i]] = Some(z.conj());
    }
    if let Some(init) = &a.init {
        for item in init.split(',').filter(|t| !t.trim().is_empty()) {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parameter(format!("expected name=value, got `{item}`")))?;
            let i = chart
                .index_of(name.trim())
                .ok_or_else(|| Error::Symbol(format!("`{}` is not a chart symbol", name.trim())))?;
            let z = parse_constant(value)?;
            state[i] = Some(z);
            let j = chart.conjugation()[i];
            if j != i && state[j].is_none() {
                state[j] = Some(z.conj());
            }
        }
    }
    // fill partners given only through their starred name
    for i in 0..n {
        let j = chart.conjugation()[i];
        if state[i].is_none() {
            if let Some(z) = state[j] {
                state[i] = Some(z.conj());
            }
        }
    }
    state
        .into_iter()
        .enumerate()
        .map(|(i, z)| z.ok_or_else(|| Error::Parameter(format!("no initial value for `{}`", chart.names()[i]))))
        .collect()
}

fn parse_decimal_complex(t: &str) -> Option<Complex64> {
    if let Ok(x) = t.parse::<f64>() {
        return Some(Complex64::new(x, 0.0));
    }
    let body = t.strip_suffix('i')?;
    let bytes = body.as_bytes();
    // split at the last sign that is not a leading sign or an exponent sign
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (body[..k].parse::<f64>().ok()?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => v.parse::<f64>().ok()?,
    };
    Some(Complex64::new(re, im))
}

/// `c` when `h = c·z*·z` for the chart's first pair.
fn number_operator_scale(s: &PoissonStructure, h: &PolyExpr) -> Option<(usize, f64)> {
    let chart = s.chart();
    let i = (0..chart.dim()).find(|&i| chart.conjugation()[i] > i)?;
    let j = chart.conjugation()[i];
    let (names, mut terms) = (chart.names(), h.terms());
    let (m, c) = terms.next()?;
    if terms.next().is_some() || !c.is_real() {
        return None;
    }
    let ok = m.len() == 2 && m.get(&names[i]) == Some(&1) && m.get(&names[j]) == Some(&1);
    ok.then(|| (i, c.to_c64().re))
}

fn flow(a: &FlowArgs) -> Result<Report> {
    let s = load_structure(&a.structure, true)?;
    let h = parse_poly(&a.hamiltonian)?;
    let start = initial_state(&s, a)?;
    let mut cfg = FlowConfig::new(a.t, a.samples).with_tolerances(a.rtol, a.atol);
    cfg.max_step = cfg.max_step.min(a.t);
    let traj = integrate(&s, &h, &start, &cfg)?;
    let mut r = Report::new("flow");
    structure_params(&mut r, &s);
    r.param("H", h.to_string())
        .param("t", a.t)
        .param("samples", a.samples as u64)
        .param("rtol", a.rtol)
        .param("atol", a.atol)
        .param(
            "start",
            start.iter().map(|z| json!([z.re, z.im])).collect::<Vec<_>>(),
        );
    for (name, series) in &traj.monitors {
        let worst = series.iter().cloned().fold(0.0, f64::max);
        let tol = if name == "conjugation_defect" { 1e-8 } else { a.drift_tol };
        r.check(&format!("max_{name}"), worst, tol);
    }
    if s.name == "qosc1" && s.chart().kind() == ChartKind::Holomorphic {
        if let (Some((i, c)), Some(beta)) = (number_operator_scale(&s, &h), s.beta().as_f64()) {
            let z: Vec<Complex64> = traj.points.iter().map(|p| p[i]).collect();
            let measured = measure_frequency(&traj.times, &z)?;
            let expected = c * (1.0 - start[i].norm_sqr() / beta);
            r.detail("frequency", measured).detail("frequency_expected", expected);
            r.check(
                "frequency_relative_error",
                (measured - expected).abs() / expected.abs().max(f64::MIN_POSITIVE),
                1e-6,
            );
        }
    }
    if let Some(path) = &a.out {
        let f = fs::File::create(path).map_err(|e| Error::Format(e.to_string()))?;
        traj.write_csv(f)?;
    }
    if let Some(path) = &a.json {
        fs::write(path, traj.to_json()?).map_err(|e| Error::Format(e.to_string()))?;
    }
    Ok(r)
}

fn kahler(a: &KahlerArgs) -> Result<Report> {
    let m = KahlerModel::new(a.modes, a.beta)?;
    let mut r = Report::new("kahler");
    r.param("modes", a.modes as u64).param("beta", a.beta).param("samples", a.samples as u64);
    r.seed = Some(a.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut metric_err: f64 = 0.0;
    let mut ratios = Vec::with_capacity(a.samples);
    for _ in 0..a.samples {
        let z: Vec<Complex64> = (0..a.modes)
            .map(|_| {
                let r2 = if a.beta > 0.0 {
                    rng.gen_range(0.0..0.4 * a.beta)
                } else {
                    rng.gen_range(0.0..4.0)
                };
                Complex64::from_polar(r2.sqrt(), rng.gen_range(0.0..std::f64::consts::TAU))
            })
            .collect();
        let g = m.metric(&z)?;
        let fd = m.metric_fd(&z, 1e-3)?;
        for (x, y) in g.iter().zip(&fd) {
            metric_err = metric_err.max((x - y).abs());
        }
        let c = m.scalar_curvature(&z)?;
        ratios.push(c.r_impl / c.r_closed);
    }
    r.check("metric_vs_hessian", metric_err, 1e-6);
    if !ratios.is_empty() {
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let var = ratios.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / ratios.len() as f64;
        r.detail("curvature_ratio", mean);
        r.check("curvature_ratio_spread", var.sqrt() / mean.abs(), 1e-8);
    }
    if let Some(grid) = &a.grid {
        let parts: Vec<&str> = grid.split(':').collect();
        let bad = || Error::Parameter(format!("grid must be start:stop:count, got `{grid}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let r0: f64 = parts[0].parse().map_err(|_| bad())?;
        let r1: f64 = parts[1].parse().map_err(|_| bad())?;
        let k: usize = parts[2].parse().map_err(|_| bad())?;
        if k < 2 {
            return Err(bad());
        }
        r.param("grid", grid.clone());
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(["r2", "u", "potential", "metric", "metric_fd", "r_impl", "r_closed"])
            .map_err(io)?;
        for i in 0..k {
            let r2 = r0 + (r1 - r0) * i as f64 / (k - 1) as f64;
            let z = vec![Complex64::new(r2.sqrt(), 0.0); a.modes];
            let c = m.scalar_curvature(&z)?;
            let row = [
                r2,
                2.0 * r2 / a.beta,
                m.potential(&z)?,
                m.metric(&z)?[0],
                m.metric_fd(&z, 1e-3)?[0],
                c.r_impl,
                c.r_closed,
            ];
            w.write_record(row.iter().map(|x| format!("{x:.17e}"))).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        match &a.out {
            Some(path) => fs::write(path, bytes).map_err(|e| Error::Format(e.to_string()))?,
            None => {
                r.detail("grid_csv", String::from_utf8_lossy(&bytes).into_owned());
            }
        }
    }
    if let Some(point) = &a.point {
        let z: Vec<Complex64> = point.split(';').map(parse_constant).collect::<Result<_>>()?;
        let c = m.scalar_curvature(&z)?;
        r.detail(
            "point",
            json!({
                "z": z.iter().map(|w| [w.re, w.im]).collect::<Vec<_>>(),
                "potential": m.potential(&z)?,
                "metric": m.metric(&z)?,
                "r_impl": c.r_impl,
                "r_closed": c.r_closed,
            }),
        );
    }
    Ok(r)
}

fn dirac(a: &DiracArgs) -> Result<Report> {
    let s = load_structure(&a.structure, true)?;
    let method = match a.method {
        MethodArg::Closed => OmegaBarMethod::ClosedForm,
        MethodArg::Quadrature => OmegaBarMethod::Quadrature { tol: a.quad_tol },
        MethodArg::Auto => match build_constraints(&s, OmegaBarMethod::ClosedForm) {
            Ok(_) => OmegaBarMethod::ClosedForm,
            Err(Error::Parameter(_)) => OmegaBarMethod::Quadrature { tol: a.quad_tol },
            Err(e) => return Err(e),
        },
    };
    let beta = s.beta().as_f64().unwrap_or(1.0);
    let radius = a.radius.unwrap_or(0.5 * beta.abs().sqrt());
    let dim = s.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let samples: Vec<Vec<f64>> = (0..a.samples)
        .map(|_| (0..dim).map(|_| rng.gen_range(-radius..=radius)).collect())
        .collect();
    let red = verify_reduction(&s, &samples, a.tol, method)?;
    let mut r = Report::new("dirac verify");
    structure_params(&mut r, &s);
    r.seed = Some(a.seed);
    r.param("samples", a.samples as u64)
        .param("radius", radius)
        .param("method", serde_json::to_value(method).map_err(|e| Error::Format(e.to_string()))?);
    for (k, p) in red.points.iter().enumerate() {
        r.check(&format!("point[{k}]"), p.max_error, a.tol);
    }
    if let Some(path) = &a.out {
        let text = serde_json::to_string_pretty(&red).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::Format(e.to_string()))?;
    }
    Ok(r)
}

/// Known relations of the shipped systems as `(name, lhs, rhs)`.
fn system_relations(name: &str, p: &Params) -> Vec<(String, NCPoly, NCPoly)> {
    let hbar = Scalar::real(p.hbar.clone());
    let ih = &Scalar::i() * &hbar;
    let term = |w: &str, c: Scalar| NCPoly::word(w).scale(&c);
    let one = Scalar::from_int(1);
    match name {
        "eq1" => {
            let q2 = p.q_real();
            vec![(
                "b b+ - q^2 b+ b = hbar".into(),
                &NCPoly::word("b b+") - &term("b+ b", q2),
                NCPoly::constant(hbar),
            )]
        }
        "eq5" | "eq5-wrong" => {
            let q = p.q_real();
            vec![
                ("p x - q x p = -i hbar".into(), &NCPoly::word("p x") - &term("x p", q.clone()), NCPoly::constant(-&ih)),
                ("x p+ - q p+ x = i hbar".into(), &NCPoly::word("x p+") - &term("p+ x", q.clone()), NCPoly::constant(ih)),
                ("p+ p = q p p+".into(), NCPoly::word("p+ p"), term("p p+", q)),
            ]
        }
        "canonical" => vec![(
            "x p - p x = i hbar".into(),
            &NCPoly::word("x p") - &NCPoly::word("p x"),
            NCPoly::constant(ih),
        )],
        "qparticle" => {
            let a = Scalar::new(Rational::from_integer(0.into()), &p.hbar / (&p.beta * Rational::from_integer(2.into())));
            let c = -(ih / (&one + &a));
            vec![(
                "p x - q x p = -i hbar/(1 + i hbar/2beta)".into(),
                &NCPoly::word("p x") - &term("x p", p.q_phase()),
                NCPoly::constant(c),
            )]
        }
        _ => Vec::new(),
    }
}

fn ncalg(a: &NcalgArgs) -> Result<Report> {
    let params = Params::new(parse_number(&a.hbar)?, parse_number(&a.beta)?)?;
    let (sys, name) = match (&a.system, &a.file) {
        (Some(n), _) => (system(n, &params)?, n.clone()),
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Format(e.to_string()))?;
            let s = RewriteSystem::from_json_str(&text)?;
            let n = s.name().to_string();
            (s, n)
        }
        (None, None) => return Err(Error::Parameter("need --system or --file".into())),
    };
    if let Some(path) = &a.emit {
        let text = serde_json::to_string_pretty(&sys.to_json()).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::Format(e.to_string()))?;
    }
    let mut r = Report::new("ncalg check");
    r.param("system", name.clone())
        .param("hbar", format_rational(&params.hbar))
        .param("beta", format_rational(&params.beta))
        .param("corpus", a.corpus as u64);
    r.seed = Some(a.seed);
    let gens = sys.alphabet().to_vec();
    let mut jacobi_terms = 0usize;
    let mut residuals = serde_json::Map::new();
    for i in 0..gens.len() {
        for j in i..gens.len() {
            for k in j..gens.len() {
                if i == k {
                    continue;
                }
                let res = sys.jacobi_check(&gens[i], &gens[j], &gens[k])?;
                jacobi_terms += res.len();
                residuals.insert(format!("{} {} {}", gens[i], gens[j], gens[k]), res.to_string().into());
            }
        }
    }
    r.detail("jacobi_residuals", serde_json::Value::Object(residuals));
    r.check("jacobi_residual_terms", jacobi_terms as f64, 0.0);
    let mut relations = serde_json::Map::new();
    for (label, lhs, rhs) in system_relations(&name, &params) {
        let res = sys.normal_form(&(&lhs - &rhs))?;
        relations.insert(label.clone(), res.to_string().into());
        r.check(&format!("relation: {label}"), res.len() as f64, 0.0);
    }
    if !relations.is_empty() {
        r.detail("relation_residuals", serde_json::Value::Object(relations));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let corpus: Vec<NCPoly> = (0..a.corpus).map(|_| sys.random_poly(&mut rng, 3, 6)).collect();
    r.check("confluence_failures", sys.confluence_failures(&corpus)? as f64, 0.0);
    Ok(r)
}

fn fock_residuals(a: &FockResidualArgs) -> Result<Report> {
    let dressing = if a.undressed { Dressing::Identity } else { Dressing::QPower };
    let ops = multimode_with(a.modes, a.trunc, a.hbar, a.q, dressing)?;
    let algebra = match a.algebra {
        AlgebraArg::Eq1 => Algebra::Eq1,
        AlgebraArg::Suqn => Algebra::Suqn,
    };
    let rep = relation_residuals(&ops, algebra)?;
    let mut r = Report::new("fock residuals");
    r.param("algebra", rep.algebra.clone())
        .param("modes", a.modes as u64)
        .param("trunc", a.trunc as u64)
        .param("q", a.q)
        .param("hbar", a.hbar)
        .param("dressing", if a.undressed { "identity" } else { "q_power" });
    r.detail("interior_states", rep.interior_states as u64);
    for (name, v) in &rep.relations {
        r.check(name, *v, a.tol);
    }
    Ok(r)
}

fn fock_limit(a: &FockLimitArgs) -> Result<Report> {
    if a.steps < 3 {
        return Err(Error::Parameter("need --steps >= 3".into()));
    }
    let hbars: Vec<f64> = (2..=a.steps as i32).map(|k| 0.5f64.powi(k)).collect();
    let scan = classical_limit_scan(a.beta, a.action, &hbars)?;
    let mut r = Report::new("fock limit");
    r.param("beta", a.beta).param("action", a.action).param("steps", a.steps);
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(["hbar", "level", "value", "target", "error"]).map_err(io)?;
    for row in &scan.rows {
        w.write_record([
            format!("{:.17e}", row.hbar),
            row.level.to_string(),
            format!("{:.17e}", row.value),
            format!("{:.17e}", row.target),
            format!("{:.17e}", row.error),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    if let Some(path) = &a.out {
        fs::write(path, &bytes).map_err(|e| Error::Format(e.to_string()))?;
    }
    let all_exact = scan.rows.iter().all(|row| row.error == 0.0);
    if !all_exact {
        let increases = scan.rows.windows(2).filter(|w| w[1].error >= w[0].error).count();
        r.check("error_increases", increases as f64, 0.0);
        r.check("order_minus_one", (scan.order - 1.0).abs(), 0.1);
    }
    r.detail("order", if scan.order.is_finite() { json!(scan.order) } else { json!(null) });
    r.detail("extrapolated", scan.extrapolated).detail("target", scan.target);
    r.check("extrapolation_error", (scan.extrapolated - scan.target).abs(), 1e-10);
    if a.beta > 0.0 {
        let h = hbars[0].min(a.beta / 2.0);
        r.check("operator_identity", classical_identity_residual(16, h, a.beta)?, 1e-12);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(parse_constant("0.1+0.2i").unwrap(), c(0.1, 0.2));
        assert_eq!(parse_constant("-2.5e-1i").unwrap(), c(0.0, -0.25));
        assert_eq!(parse_constant("1e-3-i").unwrap(), c(1e-3, -1.0));
        assert_eq!(parse_constant("1/2 - 3/4i").unwrap(), c(0.5, -0.75));
        assert!(parse_constant("x").is_err());
    }

    #[test]
    fn structure_resolution() {
        let a = StructureArgs { structure: "suqn".into(), n: 3, beta: None };
        assert_eq!(load_structure(&a, false).unwrap().name, "suqn(3)");
        let a = StructureArgs { structure: "diag(2)".into(), n: 5, beta: Some("1/2".into()) };
        assert_eq!(load_structure(&a, true).unwrap().dim(), 4);
        let a = StructureArgs { structure: "qosc1".into(), n: 1, beta: None };
        assert!(load_structure(&a, true).is_err());
    }
}
