//! Second-class constraint embedding of a Poisson structure and the
//! resulting Dirac brackets.
//!
//! The chart `θ^i` is doubled with momenta `π_i` carrying the canonical
//! bracket `{θ^j, π_k} = δ^j_k`. The constraints
//! `φ_i = π_i + ω̄_ij(θ) θ^j` with `ω̄(θ) = ∫₀¹ α ω(αθ) dα`, `ω` the inverse
//! of the bivector, have `{φ_a, φ_b} = ω_ab`, so the Dirac bracket of two
//! coordinates is the original bivector.
//!
//! Holomorphic charts are first converted to real ones with
//! `z = (u + iv)/√2` (see [`real_form`]).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::chart::{ChartKind, CoordinateChart};
use crate::error::{Error, Result};
use crate::poisson::{Beta, PoissonStructure};
use crate::poly::{CompiledPoly, PolyExpr};
use crate::quadrature;
use crate::scalar::{rat, Scalar};

/// Relative determinant threshold below which a matrix counts as singular.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Converts a structure on a holomorphic (or mixed) chart to real
/// coordinates. Each pair `(z, z*)` becomes `(u, v)` with
/// `z = (u + iv)/√2`; self-paired symbols are kept. Entries must have even
/// total degree in the paired symbols so that the result stays rational.
pub fn real_form(p: &PoissonStructure) -> Result<PoissonStructure> {
    let chart = p.chart();
    if chart.kind() == ChartKind::Real {
        return Ok(p.clone());
    }
    let names = chart.names();
    let conj = chart.conjugation();
    let pairs: Vec<(usize, usize)> = (0..names.len())
        .filter(|&i| conj[i] > i)
        .map(|i| (i, conj[i]))
        .collect();
    let label = |k: usize, base: &str| {
        if pairs.len() == 1 {
            base.to_string()
        } else {
            format!("{base}{}", k + 1)
        }
    };

    // New real coordinates, each a combination of old ones:
    // u = (z + z*)/√2, v = −i(z − z*)/√2, x = x.
    // `combo[r]` lists (old index, coefficient); the 1/√2 factors are
    // tracked as a power of two in `half_powers`.
    let mut new_names = Vec::new();
    let mut combos: Vec<Vec<(usize, Scalar)>> = Vec::new();
    let mut half_powers: Vec<u32> = Vec::new();
    let mut pair_k = 0;
    for i in 0..names.len() {
        if conj[i] == i {
            new_names.push(names[i].clone());
            combos.push(vec![(i, Scalar::from_int(1))]);
            half_powers.push(0);
        } else if conj[i] > i {
            let j = conj[i];
            new_names.push(label(pair_k, "u"));
            combos.push(vec![(i, Scalar::from_int(1)), (j, Scalar::from_int(1))]);
            half_powers.push(1);
            new_names.push(label(pair_k, "v"));
            combos.push(vec![(i, -Scalar::i()), (j, Scalar::i())]);
            half_powers.push(1);
            pair_k += 1;
        }
    }
    // Substitution z → (u + iv), z* → (u − iv), with 2^{-d/2} per term.
    let mut subs: Vec<(String, PolyExpr)> = Vec::new();
    let mut paired_syms: Vec<String> = Vec::new();
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let u = PolyExpr::var(&label(k, "u"));
        let iv = PolyExpr::var(&label(k, "v")).scale(&Scalar::i());
        subs.push((names[i].clone(), &u + &iv));
        subs.push((names[j].clone(), &u - &iv));
        paired_syms.push(names[i].clone());
        paired_syms.push(names[j].clone());
    }
    let rewrite = |e: &PolyExpr| -> Result<PolyExpr> {
        let mut out = PolyExpr::zero();
        for (m, c) in e.terms() {
            let d: i32 = paired_syms.iter().map(|s| m.get(s).copied().unwrap_or(0)).sum();
            if d % 2 != 0 {
                return Err(Error::Parameter(
                    "odd-degree term cannot be converted to a rational real form".into(),
                ));
            }
            let mut t = PolyExpr::from_terms([(m.clone(), c.clone())])
                .scale(&Scalar::real(rat(1, 1 << (d / 2))));
            for (s, val) in &subs {
                t = t.substitute_poly(s, val)?;
            }
            out = &out + &t;
        }
        Ok(out)
    };

    let n = new_names.len();
    let mut w = vec![vec![PolyExpr::zero(); n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let mut acc = PolyExpr::zero();
            for (i, ci) in &combos[a] {
                for (j, cj) in &combos[b] {
                    acc = &acc + &p.entry(*i, *j).scale(&(ci * cj));
                }
            }
            let hp = half_powers[a] + half_powers[b];
            if hp % 2 != 0 {
                return Err(Error::Parameter(
                    "mixed real/paired brackets need √2 factors; not supported".into(),
                ));
            }
            let acc = acc.scale(&Scalar::real(rat(1, 1 << (hp / 2))));
            let entry = rewrite(&acc)?;
            if entry.terms().any(|(_, c)| !c.is_real()) {
                return Err(Error::Parameter("real form has complex entries".into()));
            }
            w[b][a] = -&entry;
            w[a][b] = entry;
        }
    }
    let casimirs = p.casimirs().iter().map(&rewrite).collect::<Result<Vec<_>>>()?;
    PoissonStructure::new(
        format!("{}-real", p.name),
        CoordinateChart::real(new_names),
        w,
        casimirs,
        p.beta().clone(),
    )
}

/// `ω̄` for polynomial lower-index entries: a component homogeneous of
/// degree `k` in `vars` is scaled by `1/(k + 2)`.
pub fn omega_bar_polynomial(entries: &[Vec<PolyExpr>], vars: &[String]) -> Vec<Vec<PolyExpr>> {
    entries
        .iter()
        .map(|row| {
            row.iter()
                .map(|e| {
                    e.homogeneous_parts(vars)
                        .into_iter()
                        .fold(PolyExpr::zero(), |acc, (k, part)| {
                            &acc + &part.scale(&Scalar::real(rat(1, i64::from(k) + 2)))
                        })
                })
                .collect()
        })
        .collect()
}

/// `ω̄(θ) = ∫₀¹ α ω(αθ) dα` by adaptive Gauss–Legendre quadrature.
pub fn omega_bar<F>(omega_lower: F, point: &[f64], quad_tol: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    let n = omega_lower(point)?.nrows();
    let v = quadrature::integrate(
        |a| {
            let p: Vec<f64> = point.iter().map(|x| a * x).collect();
            Ok(omega_lower(&p)?.iter().map(|x| a * x).collect())
        },
        0.0,
        1.0,
        n * n,
        quad_tol,
    )?;
    Ok(DMatrix::from_column_slice(n, n, &v))
}

/// Inverse with an explicit second-class (nondegeneracy) check.
pub fn checked_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let scale: f64 = m
        .row_iter()
        .map(|r| r.iter().fold(0.0f64, |a, x| a.max(x.abs())))
        .product();
    let lu = m.clone().lu();
    let det = lu.determinant();
    if n == 0 || !det.is_finite() || det.abs() <= DEGENERACY_THRESHOLD * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Degeneracy(format!("|det| = {:e}", det.abs())));
    }
    lu.try_inverse()
        .ok_or_else(|| Error::Degeneracy("LU inverse failed".into()))
}

/// How `ω̄` and its derivatives are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OmegaBarMethod {
    /// Exact expressions: constant bivectors, or 2-dim bivectors
    /// `ω^{12} = c + Q(θ)` with `Q` homogeneous quadratic.
    ClosedForm,
    /// Quadrature of `α ω(αθ)` and of `α² ∂ω(αθ)`.
    Quadrature { tol: f64 },
}

#[derive(Clone, Debug)]
enum ClosedForm {
    Constant(DMatrix<f64>),
    /// `ω^{12} = c + Q`
    Planar { c: f64, q: CompiledPoly, dq: Vec<CompiledPoly> },
}

/// Gradient of a function on the extended space `(θ, π)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub d_theta: Vec<f64>,
    pub d_pi: Vec<f64>,
}

impl Gradient {
    pub fn zero(n: usize) -> Self {
        Gradient {
            d_theta: vec![0.0; n],
            d_pi: vec![0.0; n],
        }
    }

    pub fn theta(n: usize, i: usize) -> Self {
        let mut g = Gradient::zero(n);
        g.d_theta[i] = 1.0;
        g
    }

    pub fn pi(n: usize, i: usize) -> Self {
        let mut g = Gradient::zero(n);
        g.d_pi[i] = 1.0;
        g
    }

    pub fn scaled_sum(&self, a: f64, other: &Gradient, b: f64) -> Gradient {
        Gradient {
            d_theta: self.d_theta.iter().zip(&other.d_theta).map(|(x, y)| a * x + b * y).collect(),
            d_pi: self.d_pi.iter().zip(&other.d_pi).map(|(x, y)| a * x + b * y).collect(),
        }
    }
}

/// Canonical bracket on the extended space.
pub fn canonical_bracket(a: &Gradient, b: &Gradient) -> f64 {
    a.d_theta
        .iter()
        .zip(&b.d_pi)
        .map(|(x, y)| x * y)
        .sum::<f64>()
        - a.d_pi.iter().zip(&b.d_theta).map(|(x, y)| x * y).sum::<f64>()
}

/// The doubled phase space `(θ^i, π_i)` over a real chart.
#[derive(Clone, Debug)]
pub struct ExtendedPhaseSpace {
    pub theta: Vec<String>,
    pub pi: Vec<String>,
}

impl ExtendedPhaseSpace {
    pub fn new(theta: &[String]) -> Self {
        ExtendedPhaseSpace {
            theta: theta.to_vec(),
            pi: theta.iter().map(|t| format!("pi_{t}")).collect(),
        }
    }

    pub fn symbols(&self) -> Vec<String> {
        self.theta.iter().chain(&self.pi).cloned().collect()
    }

    /// Value and gradient of a polynomial in `θ` and `π` at a point.
    pub fn poly_gradient(&self, f: &PolyExpr, theta: &[f64], pi: &[f64]) -> Result<(f64, Gradient)> {
        let syms = self.symbols();
        let x: Vec<f64> = theta.iter().chain(pi).copied().collect();
        let ev = |p: &PolyExpr| -> Result<f64> { Ok(p.compile(&syms)?.eval_real(&x).re) };
        let n = self.theta.len();
        let mut g = Gradient::zero(n);
        for i in 0..n {
            g.d_theta[i] = ev(&f.derivative(&self.theta[i]))?;
            g.d_pi[i] = ev(&f.derivative(&self.pi[i]))?;
        }
        Ok((ev(f)?, g))
    }
}

/// Constraints `φ_i = π_i + ω̄_ij(θ) θ^j` built from a structure.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    structure: PoissonStructure,
    space: ExtendedPhaseSpace,
    upper: Vec<Vec<CompiledPoly>>,
    upper_d: Vec<Vec<Vec<CompiledPoly>>>,
    method: OmegaBarMethod,
    closed: Option<ClosedForm>,
}

/// Per-point result of [`verify_reduction`].
#[derive(Clone, Debug, Serialize)]
pub struct PointReport {
    pub theta: Vec<f64>,
    pub max_error: f64,
    pub det_delta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReductionReport {
    pub structure: String,
    pub method: OmegaBarMethod,
    pub tol: f64,
    pub max_error: f64,
    pub pass: bool,
    pub points: Vec<PointReport>,
}

/// Builds the constraint set for a structure with numeric `beta`.
/// Holomorphic charts are converted with [`real_form`] first.
pub fn build_constraints(p: &PoissonStructure, method: OmegaBarMethod) -> Result<ConstraintSet> {
    if p.dim() % 2 != 0 {
        return Err(Error::Degeneracy(format!(
            "odd-dimensional bivector ({}) is never invertible",
            p.dim()
        )));
    }
    let real = real_form(p)?;
    let real = match real.beta() {
        Beta::Value(_) => real,
        Beta::Symbolic => {
            return Err(Error::Parameter("constraint embedding needs a numeric beta".into()))
        }
    };
    let n = real.dim();
    let beta_val = Scalar::real(match real.beta() {
        Beta::Value(r) => r.clone(),
        Beta::Symbolic => unreachable!(),
    });
    let names = real.chart().names().to_vec();
    let inst = |e: &PolyExpr| e.substitute("beta", &beta_val);
    let mut upper = Vec::with_capacity(n);
    let mut upper_d = Vec::with_capacity(n);
    for row in real.bivector() {
        let mut r = Vec::with_capacity(n);
        let mut rd = Vec::with_capacity(n);
        for e in row {
            let e = inst(e)?;
            r.push(e.compile(&names)?);
            rd.push(names.iter().map(|s| e.derivative(s).compile(&names)).collect::<Result<Vec<_>>>()?);
        }
        upper.push(r);
        upper_d.push(rd);
    }
    let closed = match method {
        OmegaBarMethod::ClosedForm => Some(closed_form(&real, &names, &beta_val)?),
        OmegaBarMethod::Quadrature { tol } => {
            if !(tol > 0.0) {
                return Err(Error::Parameter("quadrature tolerance must be positive".into()));
            }
            None
        }
    };
    Ok(ConstraintSet {
        space: ExtendedPhaseSpace::new(&names),
        structure: real,
        upper,
        upper_d,
        method,
        closed,
    })
}

fn closed_form(real: &PoissonStructure, names: &[String], beta: &Scalar) -> Result<ClosedForm> {
    let n = real.dim();
    let inst: Vec<Vec<PolyExpr>> = real
        .bivector()
        .iter()
        .map(|row| row.iter().map(|e| e.substitute("beta", beta)).collect())
        .collect::<Result<_>>()?;
    if inst.iter().flatten().all(|e| e.as_constant().is_some()) {
        let m = DMatrix::from_fn(n, n, |i, j| inst[i][j].as_constant().unwrap().to_c64().re);
        let lower = checked_inverse(&m)?;
        // ω̄ of a constant form is half of it.
        let bar = omega_bar_polynomial(
            &(0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| PolyExpr::constant(Scalar::from_c64(Complex64::new(lower[(i, j)], 0.0)).unwrap()))
                        .collect()
                })
                .collect::<Vec<_>>(),
            names,
        );
        return Ok(ClosedForm::Constant(DMatrix::from_fn(n, n, |i, j| {
            bar[i][j].as_constant().unwrap().to_c64().re
        })));
    }
    if n == 2 {
        let parts = inst[0][1].homogeneous_parts(names);
        let c = parts.get(&0).and_then(|p| p.as_constant()).map(|s| s.to_c64().re);
        let only_0_2 = parts.keys().all(|k| *k == 0 || *k == 2);
        if let (Some(c), true) = (c, only_0_2) {
            if c != 0.0 {
                let q = parts.get(&2).cloned().unwrap_or_default();
                return Ok(ClosedForm::Planar {
                    c,
                    dq: names.iter().map(|s| q.derivative(s).compile(names)).collect::<Result<_>>()?,
                    q: q.compile(names)?,
                });
            }
        }
    }
    Err(Error::Parameter(format!(
        "no closed form for omega-bar of `{}`; use quadrature",
        real.name
    )))
}

/// `G(x) = ln(1+x)/x` and `G'(x)`, series near zero.
fn log_ratio(x: f64) -> (f64, f64) {
    if x.abs() < 1e-3 {
        let g = 1.0 - x / 2.0 + x * x / 3.0 - x.powi(3) / 4.0 + x.powi(4) / 5.0 - x.powi(5) / 6.0;
        let dg = -0.5 + 2.0 * x / 3.0 - 0.75 * x * x + 0.8 * x.powi(3) - 5.0 * x.powi(4) / 6.0
            + 6.0 * x.powi(5) / 7.0;
        (g, dg)
    } else {
        let l = x.ln_1p();
        (l / x, (x / (1.0 + x) - l) / (x * x))
    }
}

impl ConstraintSet {
    pub fn structure(&self) -> &PoissonStructure {
        &self.structure
    }

    pub fn space(&self) -> &ExtendedPhaseSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    pub fn method(&self) -> OmegaBarMethod {
        self.method
    }

    /// Bivector `ω^{ij}(θ)`.
    pub fn upper_at(&self, theta: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.upper[i][j].eval_real(theta).re)
    }

    /// `ω_ij(θ)`, the inverse bivector.
    pub fn lower_at(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        checked_inverse(&self.upper_at(theta))
    }

    /// `∂_b ω_ij(θ) = −(ω ∂_b ω^{..} ω)_ij` for every `b`.
    fn lower_derivatives(&self, theta: &[f64], lower: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let n = self.dim();
        (0..n)
            .map(|b| {
                let du = DMatrix::from_fn(n, n, |i, j| self.upper_d[i][j][b].eval_real(theta).re);
                -(lower * du * lower)
            })
            .collect()
    }

    /// `ω̄(θ)` and `∂_b ω̄(θ)`.
    pub fn omega_bar_with_derivatives(&self, theta: &[f64]) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
        let n = self.dim();
        if theta.len() != n {
            return Err(Error::Size(format!("point has {} components, chart has {n}", theta.len())));
        }
        match (&self.closed, self.method) {
            (Some(ClosedForm::Constant(bar)), _) => Ok((bar.clone(), vec![DMatrix::zeros(n, n); n])),
            (Some(ClosedForm::Planar { c, q, dq }), _) => {
                // ω_12(αθ) = −1/(c + α²Q): ω̄_12 = −G(Q/c)/(2c), G(x) = ln(1+x)/x.
                let qv = q.eval_real(theta).re;
                let x = qv / c;
                if 1.0 + x <= 0.0 {
                    return Err(Error::Degeneracy("bivector vanishes on the segment".into()));
                }
                let (g, dg) = log_ratio(x);
                let f = -g / (2.0 * c);
                let df = -dg / (2.0 * c * c);
                let bar = DMatrix::from_row_slice(2, 2, &[0.0, f, -f, 0.0]);
                let derivs = dq
                    .iter()
                    .map(|d| {
                        let s = df * d.eval_real(theta).re;
                        DMatrix::from_row_slice(2, 2, &[0.0, s, -s, 0.0])
                    })
                    .collect();
                Ok((bar, derivs))
            }
            (None, OmegaBarMethod::Quadrature { tol }) => {
                let len = n * n * (n + 1);
                let v = quadrature::integrate(
                    |a| {
                        let p: Vec<f64> = theta.iter().map(|x| a * x).collect();
                        let lower = self.lower_at(&p)?;
                        let mut out = Vec::with_capacity(len);
                        out.extend(lower.iter().map(|x| a * x));
                        for d in self.lower_derivatives(&p, &lower) {
                            out.extend(d.iter().map(|x| a * a * x));
                        }
                        Ok(out)
                    },
                    0.0,
                    1.0,
                    len,
                    tol,
                )?;
                let bar = DMatrix::from_column_slice(n, n, &v[..n * n]);
                let derivs = (0..n)
                    .map(|b| DMatrix::from_column_slice(n, n, &v[n * n * (b + 1)..n * n * (b + 2)]))
                    .collect();
                Ok((bar, derivs))
            }
            (None, OmegaBarMethod::ClosedForm) => unreachable!("closed form resolved at build"),
        }
    }

    /// `φ_i(θ, π)`.
    pub fn values(&self, theta: &[f64], pi: &[f64]) -> Result<Vec<f64>> {
        let (bar, _) = self.omega_bar_with_derivatives(theta)?;
        let n = self.dim();
        Ok((0..n)
            .map(|i| pi[i] + (0..n).map(|j| bar[(i, j)] * theta[j]).sum::<f64>())
            .collect())
    }

    /// Momenta on the constraint surface above `θ`.
    pub fn surface_momenta(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let zero = vec![0.0; self.dim()];
        Ok(self.values(theta, &zero)?.into_iter().map(|v| -v).collect())
    }

    /// Gradients of every `φ_i` (independent of `π`).
    pub fn gradients(&self, theta: &[f64]) -> Result<Vec<Gradient>> {
        let n = self.dim();
        let (bar, derivs) = self.omega_bar_with_derivatives(theta)?;
        Ok((0..n)
            .map(|i| {
                let mut g = Gradient::pi(n, i);
                for b in 0..n {
                    g.d_theta[b] =
                        bar[(i, b)] + (0..n).map(|j| derivs[b][(i, j)] * theta[j]).sum::<f64>();
                }
                g
            })
            .collect())
    }

    /// `Δ_ab = {φ_a, φ_b}`.
    pub fn delta(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.gradients(theta)?;
        let n = self.dim();
        Ok(DMatrix::from_fn(n, n, |a, b| canonical_bracket(&g[a], &g[b])))
    }

    /// `{A,B}_D = {A,B} − {A,φ_a} Δ^{ab} {φ_b,B}` at a point.
    pub fn dirac_bracket(&self, a: &Gradient, b: &Gradient, theta: &[f64]) -> Result<f64> {
        let phis = self.gradients(theta)?;
        let n = self.dim();
        let delta = DMatrix::from_fn(n, n, |i, j| canonical_bracket(&phis[i], &phis[j]));
        let inv = checked_inverse(&delta)?;
        let mut corr = 0.0;
        for i in 0..n {
            let ai = canonical_bracket(a, &phis[i]);
            if ai == 0.0 {
                continue;
            }
            for j in 0..n {
                corr += ai * inv[(i, j)] * canonical_bracket(&phis[j], b);
            }
        }
        Ok(canonical_bracket(a, b) - corr)
    }

    /// Dirac brackets of all coordinate pairs, `{θ^i, θ^j}_D`.
    pub fn coordinate_brackets(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let phis = self.gradients(theta)?;
        let delta = DMatrix::from_fn(n, n, |i, j| canonical_bracket(&phis[i], &phis[j]));
        let inv = checked_inverse(&delta)?;
        // {θ^i, φ_k} = δ^i_k and {φ_n, θ^j} = −δ^j_n.
        Ok(inv)
    }
}

/// Largest `|{θ^i,θ^j}_D − ω^{ij}(θ)|` over the sample points.
pub fn verify_reduction(
    p: &PoissonStructure,
    samples: &[Vec<f64>],
    tol: f64,
    method: OmegaBarMethod,
) -> Result<ReductionReport> {
    let set = build_constraints(p, method)?;
    let n = set.dim();
    let mut points = Vec::with_capacity(samples.len());
    let mut worst: f64 = 0.0;
    for theta in samples {
        let target = set.upper_at(theta);
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = set.dirac_bracket(&Gradient::theta(n, i), &Gradient::theta(n, j), theta)?;
                err = err.max((d - target[(i, j)]).abs());
            }
        }
        worst = worst.max(err);
        points.push(PointReport {
            theta: theta.clone(),
            max_error: err,
            det_delta: set.delta(theta)?.determinant(),
        });
    }
    Ok(ReductionReport {
        structure: set.structure().name.clone(),
        method,
        tol,
        max_error: worst,
        pass: worst <= tol,
        points,
    })
}
