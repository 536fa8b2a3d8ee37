//! Hamiltonian flows `θ̇ = {θ, H}` under a polynomial Poisson structure.
//!
//! Complex charts are integrated with every chart symbol as an independent
//! complex component (so `z` and `z*` are both carried). Reality of the
//! trajectory is monitored through the conjugation defect, not imposed.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poisson::{Beta, PoissonStructure};
use crate::poly::{CompiledPoly, PolyExpr};
use crate::scalar::Scalar;

/// Component `i` is `{θ^i, H}`.
pub fn hamiltonian_vector_field(p: &PoissonStructure, h: &PolyExpr) -> Result<Vec<PolyExpr>> {
    p.chart()
        .names()
        .iter()
        .map(|s| p.bracket(&PolyExpr::var(s), h))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub t_end: f64,
    pub sample_count: usize,
}

impl FlowConfig {
    pub fn new(t_end: f64, sample_count: usize) -> Self {
        FlowConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_step: 0.1,
            t_end,
            sample_count,
        }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !pos(self.rel_tol) || !pos(self.abs_tol) {
            return Err(Error::Parameter("tolerances must be positive".into()));
        }
        if !pos(self.t_end) || !pos(self.max_step) {
            return Err(Error::Parameter("t_end and max_step must be positive".into()));
        }
        if self.sample_count < 2 {
            return Err(Error::Parameter("sample_count must be at least 2".into()));
        }
        Ok(())
    }
}

/// Sampled solution plus named monitor series.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub structure: String,
    pub beta: String,
    pub hamiltonian: String,
    pub config: FlowConfig,
    pub symbols: Vec<String>,
    pub times: Vec<f64>,
    #[serde(serialize_with = "serialize_points")]
    pub points: Vec<Vec<Complex64>>,
    /// `(name, series)`; series lengths equal `times.len()`.
    pub monitors: Vec<(String, Vec<f64>)>,
}

fn serialize_points<S: serde::Serializer>(
    points: &[Vec<Complex64>],
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    let flat: Vec<Vec<[f64; 2]>> = points
        .iter()
        .map(|p| p.iter().map(|z| [z.re, z.im]).collect())
        .collect();
    flat.serialize(ser)
}

impl Trajectory {
    pub fn component(&self, symbol: &str) -> Option<Vec<Complex64>> {
        let i = self.symbols.iter().position(|s| s == symbol)?;
        Some(self.points.iter().map(|p| p[i]).collect())
    }

    pub fn monitor(&self, name: &str) -> Option<&[f64]> {
        self.monitors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s.as_slice())
    }

    /// Largest value of a monitor over the run.
    pub fn monitor_max(&self, name: &str) -> Option<f64> {
        self.monitor(name).map(|s| s.iter().cloned().fold(0.0, f64::max))
    }

    /// CSV: `time`, then `sym.re`, `sym.im` per chart symbol, then monitors.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::Format(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["time".to_string()];
        for s in &self.symbols {
            header.push(format!("{s}.re"));
            header.push(format!("{s}.im"));
        }
        header.extend(self.monitors.iter().map(|(n, _)| n.clone()));
        w.write_record(&header).map_err(io)?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![format!("{t:.17e}")];
            for z in &self.points[k] {
                row.push(format!("{:.17e}", z.re));
                row.push(format!("{:.17e}", z.im));
            }
            row.extend(self.monitors.iter().map(|(_, s)| format!("{:.17e}", s[k])));
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }
}

struct Field {
    components: Vec<CompiledPoly>,
}

impl Field {
    fn eval(&self, y: &[Complex64], out: &mut [Complex64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(y);
        }
    }
}

/// Replaces a symbolic `beta` in `h` by the structure's value.
fn instantiate(p: &PoissonStructure, h: &PolyExpr) -> Result<PolyExpr> {
    match p.beta() {
        Beta::Value(r) => h.substitute("beta", &Scalar::real(r.clone())),
        Beta::Symbolic => Err(Error::Parameter(
            "flows need a numeric beta; instantiate the structure first".into(),
        )),
    }
}

fn relative_drift(value: Complex64, initial: Complex64) -> f64 {
    (value - initial).norm() / initial.norm().max(1.0)
}

/// Integrates the Hamiltonian flow with an adaptive Dormand–Prince 5(4)
/// scheme and samples `cfg.sample_count` uniform times on `[0, t_end]`.
///
/// Monitors: `energy_drift` and `casimir_<k>_drift` are
/// `|Q(t) − Q(0)| / max(|Q(0)|, 1)`; `conjugation_defect` is
/// `max |z* − conj(z)|` over paired symbols (`2|Im x|` for real ones).
pub fn integrate(
    p: &PoissonStructure,
    h: &PolyExpr,
    start: &[Complex64],
    cfg: &FlowConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let n = p.dim();
    if start.len() != n {
        return Err(Error::Size(format!("start has {} components, chart has {n}", start.len())));
    }
    let h = instantiate(p, h)?;
    let names = p.chart().names().to_vec();
    let conj = p.chart().conjugation().to_vec();
    let defect = |y: &[Complex64]| {
        (0..n)
            .map(|i| (y[conj[i]] - y[i].conj()).norm())
            .fold(0.0, f64::max)
    };
    if defect(start) > 1e-12 {
        return Err(Error::Domain(
            "start point must satisfy z* = conj(z) for every paired symbol".into(),
        ));
    }
    let field = Field {
        components: hamiltonian_vector_field(p, &h)?
            .iter()
            .map(|c| c.compile(&names))
            .collect::<Result<_>>()?,
    };
    let energy = h.compile(&names)?;
    let casimirs: Vec<CompiledPoly> = p
        .casimirs()
        .iter()
        .map(|c| instantiate(p, c).and_then(|c| c.compile(&names)))
        .collect::<Result<_>>()?;

    let times: Vec<f64> = (0..cfg.sample_count)
        .map(|k| cfg.t_end * k as f64 / (cfg.sample_count - 1) as f64)
        .collect();
    let mut points = Vec::with_capacity(times.len());
    points.push(start.to_vec());

    let mut stepper = DormandPrince::new(&field, start, cfg);
    for &target in &times[1..] {
        stepper.advance_to(target)?;
        points.push(stepper.y.clone());
    }

    let e0 = energy.eval(start);
    let c0: Vec<Complex64> = casimirs.iter().map(|c| c.eval(start)).collect();
    let mut monitors = vec![(
        "energy_drift".to_string(),
        points.iter().map(|y| relative_drift(energy.eval(y), e0)).collect(),
    )];
    for (k, c) in casimirs.iter().enumerate() {
        monitors.push((
            format!("casimir_{k}_drift"),
            points.iter().map(|y| relative_drift(c.eval(y), c0[k])).collect(),
        ));
    }
    monitors.push((
        "conjugation_defect".to_string(),
        points.iter().map(|y| defect(y)).collect(),
    ));

    Ok(Trajectory {
        structure: p.name.clone(),
        beta: p.beta().to_string(),
        hamiltonian: h.to_string(),
        config: cfg.clone(),
        symbols: names,
        times,
        points,
        monitors,
    })
}

// Dormand–Prince 5(4) tableau (autonomous fields, so no node times).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct DormandPrince<'a> {
    field: &'a Field,
    rel_tol: f64,
    abs_tol: f64,
    max_step: f64,
    t: f64,
    h: f64,
    y: Vec<Complex64>,
    k: [Vec<Complex64>; 7],
}

impl<'a> DormandPrince<'a> {
    fn new(field: &'a Field, y0: &[Complex64], cfg: &FlowConfig) -> Self {
        let n = y0.len();
        let zero = vec![Complex64::new(0.0, 0.0); n];
        let mut k: [Vec<Complex64>; 7] = std::array::from_fn(|_| zero.clone());
        field.eval(y0, &mut k[0]);
        DormandPrince {
            field,
            rel_tol: cfg.rel_tol,
            abs_tol: cfg.abs_tol,
            max_step: cfg.max_step,
            t: 0.0,
            h: (cfg.max_step).min(1e-3),
            y: y0.to_vec(),
            k,
        }
    }

    fn fail(&self, reason: &str) -> Error {
        Error::Integration {
            t: self.t,
            reason: reason.to_string(),
            last_state: self.y.clone(),
        }
    }

    fn advance_to(&mut self, target: f64) -> Result<()> {
        let n = self.y.len();
        let mut stage = vec![Complex64::new(0.0, 0.0); n];
        let mut y_new = stage.clone();
        while self.t < target {
            let remaining = target - self.t;
            let clipped = self.h.min(self.max_step) >= remaining;
            let h = if clipped { remaining } else { self.h.min(self.max_step) };
            if h < 1e-14 * self.t.abs().max(1.0) && !clipped {
                return Err(self.fail("step size underflow"));
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = self.y[i];
                    for (j, a) in A[s][..s].iter().enumerate() {
                        if *a != 0.0 {
                            acc += self.k[j][i] * (h * a);
                        }
                    }
                    stage[i] = acc;
                }
                self.field.eval(&stage, &mut self.k[s]);
            }
            // Stage 7 was evaluated at the 5th-order solution (FSAL).
            y_new.copy_from_slice(&stage);
            let mut err_sq = 0.0;
            for i in 0..n {
                let mut e = Complex64::new(0.0, 0.0);
                for (j, w) in E.iter().enumerate() {
                    if *w != 0.0 {
                        e += self.k[j][i] * (h * w);
                    }
                }
                let scale = self.abs_tol + self.rel_tol * self.y[i].norm().max(y_new[i].norm());
                err_sq += (e.re / scale).powi(2) + (e.im / scale).powi(2);
            }
            let err = (err_sq / (2 * n) as f64).sqrt();
            if !err.is_finite() || y_new.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                self.h = h * 0.1;
                if self.h < 1e-14 * self.t.abs().max(1.0) {
                    return Err(self.fail("non-finite state (singularity)"));
                }
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                self.t = if clipped { target } else { self.t + h };
                self.y.copy_from_slice(&y_new);
                self.k.swap(0, 6);
                // Only grow from a clipped step if it was not artificially short.
                if !clipped || factor < 1.0 {
                    self.h = h * factor;
                }
            } else {
                self.h = h * factor.min(1.0);
                if self.h < 1e-14 * self.t.abs().max(1.0) {
                    return Err(self.fail("step size underflow"));
                }
            }
        }
        Ok(())
    }
}

/// Angular frequency of `z(t) ∝ e^{−iνt}`: unwrap `arg z`, fit a least-squares
/// slope, return `−slope`.
pub fn measure_frequency(times: &[f64], z: &[Complex64]) -> Result<f64> {
    if times.len() != z.len() || times.len() < 2 {
        return Err(Error::Size("need at least two samples".into()));
    }
    let mut phase = Vec::with_capacity(z.len());
    let mut prev = z[0].arg();
    let mut offset = 0.0;
    for w in z {
        if w.norm() == 0.0 {
            return Err(Error::Domain("phase undefined at the origin".into()));
        }
        let a = w.arg();
        let mut d = a - prev;
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
            offset -= 2.0 * std::f64::consts::PI;
        }
        while d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
            offset += 2.0 * std::f64::consts::PI;
        }
        phase.push(a + offset);
        prev = a;
    }
    Ok(-least_squares_slope(times, &phase))
}

pub(crate) fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// `b(t) = b₀ exp(−iω(1 − E/(ωβ))t)` with `E = ω|b₀|²`. `beta = ∞` gives
/// the harmonic oscillator.
pub fn analytic_qoscillator(b0: Complex64, omega: f64, beta: f64, t: f64) -> Complex64 {
    let nu = omega * (1.0 - b0.norm_sqr() / beta);
    b0 * Complex64::from_polar(1.0, -nu * t)
}

/// `(x(t), p(t))` for `H = p²/2` under `{x, p} = 1 + xp/β`:
/// `x = (x₀ + p₀/γ)e^{γt} − p₀/γ`, `γ = p₀²/β`, and `x₀ + p₀t` when `γ = 0`.
pub fn analytic_qparticle(x0: f64, p0: f64, beta: f64, t: f64) -> Result<(f64, f64)> {
    if beta == 0.0 {
        return Err(Error::Parameter("beta must be nonzero".into()));
    }
    let gamma = p0 * p0 / beta;
    let x = if gamma == 0.0 {
        x0 + p0 * t
    } else {
        // (x₀ + p₀/γ)e^{γt} − p₀/γ, written to stay accurate as γ → 0
        x0 * (gamma * t).exp() + p0 * (gamma * t).exp_m1() / gamma
    };
    Ok((x, p0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(FlowConfig::new(1.0, 1).validate().is_err());
        assert!(FlowConfig::new(-1.0, 5).validate().is_err());
        assert!(FlowConfig::new(1.0, 5).with_tolerances(0.0, 1e-9).validate().is_err());
        assert!(FlowConfig::new(1.0, 5).validate().is_ok());
    }

    #[test]
    fn analytic_fixed_points() {
        assert_eq!(analytic_qoscillator(Complex64::new(0.0, 0.0), 1.0, 2.0, 3.0), Complex64::new(0.0, 0.0));
        assert_eq!(analytic_qparticle(0.7, 0.0, 1.0, 5.0).unwrap(), (0.7, 0.0));
        assert!(analytic_qparticle(0.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn slope_of_a_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        assert!((least_squares_slope(&x, &y) - 2.0).abs() < 1e-15);
    }
}
