//! Truncated number-basis matrices for the deformed oscillator algebras.
//!
//! Truncation breaks every ladder relation at the top level, so all
//! residuals are measured on the interior: basis states whose occupation is
//! at most `N − 1 − margin` in every mode (`margin = 1` by default).

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::darboux::darboux_map_qosc1;
use crate::error::{Error, Result};
use crate::flow::least_squares_slope;
use crate::ncalg::NCPoly;

/// Residual tolerance the dressed construction must meet.
pub const RESIDUAL_TOL: f64 = 1e-12;

/// `[n] = (1 − q^{2n})/(1 − q²)`, summed as `Σ_{k<n} q^{2k}`.
pub fn q_number(n: usize, q: f64) -> f64 {
    let q2 = q * q;
    let mut acc = 0.0;
    let mut p = 1.0;
    for _ in 0..n {
        acc += p;
        p *= q2;
    }
    acc
}

/// One mode: `b|n⟩ = √(ħ[n]) |n−1⟩`.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub b: DMatrix<f64>,
    pub bd: DMatrix<f64>,
}

fn check_params(trunc: usize, hbar: f64, q: f64) -> Result<()> {
    if trunc < 2 {
        return Err(Error::Size(format!("truncation {trunc} < 2")));
    }
    if !(hbar > 0.0) || !hbar.is_finite() {
        return Err(Error::Parameter(format!("hbar must be positive, got {hbar}")));
    }
    if !q.is_finite() || q <= 0.0 {
        return Err(Error::Parameter(format!("q must be positive, got {q}")));
    }
    Ok(())
}

pub fn qoscillator_ops(trunc: usize, hbar: f64, q: f64) -> Result<Ladder> {
    check_params(trunc, hbar, q)?;
    let mut b = DMatrix::zeros(trunc, trunc);
    for n in 1..trunc {
        b[(n - 1, n)] = (hbar * q_number(n, q)).sqrt();
    }
    Ok(Ladder {
        bd: b.transpose(),
        b,
    })
}

/// `diag(f(0), …, f(N−1))`
fn diag(trunc: usize, f: impl Fn(usize) -> f64) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_fn(trunc, |n, _| f(n)))
}

/// Embeds per-mode factors into the mode-major tensor product.
fn tensor(factors: &[DMatrix<f64>]) -> DMatrix<f64> {
    factors
        .iter()
        .skip(1)
        .fold(factors[0].clone(), |acc, m| acc.kronecker(m))
}

/// Dressing of mode `i` by the lower modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dressing {
    /// `D_i = Π_{k<i} q^{N_k}`
    QPower,
    /// `D_i = 1`, independent modes (a negative control).
    Identity,
}

/// Multimode operators in the tensor-product basis.
#[derive(Clone, Debug)]
pub struct MultiMode {
    pub modes: usize,
    pub trunc: usize,
    pub hbar: f64,
    pub q: f64,
    pub a: Vec<DMatrix<f64>>,
    pub ad: Vec<DMatrix<f64>>,
}

impl MultiMode {
    pub fn dim(&self) -> usize {
        self.trunc.pow(self.modes as u32)
    }

    /// Occupations of a tensor basis index (mode 0 most significant).
    pub fn occupations(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.modes];
        for k in (0..self.modes).rev() {
            occ[k] = index % self.trunc;
            index /= self.trunc;
        }
        occ
    }

    /// Indices whose occupations are all `≤ N − 1 − margin`.
    pub fn interior(&self, margin: usize) -> Vec<usize> {
        (0..self.dim())
            .filter(|&s| self.occupations(s).iter().all(|&n| n + margin < self.trunc))
            .collect()
    }
}

/// Builds `a_i = b_i D_i` with the chosen dressing, without validation.
pub fn multimode_with(modes: usize, trunc: usize, hbar: f64, q: f64, dressing: Dressing) -> Result<MultiMode> {
    if modes == 0 {
        return Err(Error::Size("need at least one mode".into()));
    }
    let single = qoscillator_ops(trunc, hbar, q)?;
    if (trunc as f64).powi(modes as i32) > 4096.0 {
        return Err(Error::Size(format!("{trunc}^{modes} basis states is too large")));
    }
    let id = DMatrix::identity(trunc, trunc);
    let qn = diag(trunc, |n| q.powi(n as i32));
    let mut a = Vec::with_capacity(modes);
    for i in 0..modes {
        let factors: Vec<DMatrix<f64>> = (0..modes)
            .map(|k| match k.cmp(&i) {
                std::cmp::Ordering::Equal => single.b.clone(),
                std::cmp::Ordering::Less if dressing == Dressing::QPower => qn.clone(),
                _ => id.clone(),
            })
            .collect();
        a.push(tensor(&factors));
    }
    let ad = a.iter().map(|m| m.transpose()).collect();
    Ok(MultiMode {
        modes,
        trunc,
        hbar,
        q,
        a,
        ad,
    })
}

/// Dressed multimode operators; fails loudly if any relation residual
/// exceeds [`RESIDUAL_TOL`] on the interior.
pub fn multimode_ops(modes: usize, trunc: usize, hbar: f64, q: f64) -> Result<MultiMode> {
    let ops = multimode_with(modes, trunc, hbar, q, Dressing::QPower)?;
    let report = suqn_residuals(&ops);
    if let Some((name, r)) = report.relations.iter().find(|(_, r)| *r > RESIDUAL_TOL) {
        return Err(Error::Construction(format!(
            "dressing fails relation {name}: residual {r:e}"
        )));
    }
    Ok(ops)
}

/// Per-relation interior residuals.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub algebra: String,
    pub modes: usize,
    pub trunc: usize,
    pub hbar: f64,
    pub q: f64,
    pub interior_states: usize,
    pub relations: Vec<(String, f64)>,
    pub max_residual: f64,
}

fn interior_norm(m: &DMatrix<f64>, idx: &[usize]) -> f64 {
    let mut worst: f64 = 0.0;
    for &r in idx {
        for &c in idx {
            worst = worst.max(m[(r, c)].abs());
        }
    }
    worst
}

fn report(algebra: &str, ops: &MultiMode, idx: &[usize], relations: Vec<(String, f64)>) -> ResidualReport {
    ResidualReport {
        algebra: algebra.into(),
        modes: ops.modes,
        trunc: ops.trunc,
        hbar: ops.hbar,
        q: ops.q,
        interior_states: idx.len(),
        max_residual: relations.iter().map(|r| r.1).fold(0.0, f64::max),
        relations,
    }
}

/// `b b† − q² b† b − ħ` for every mode taken independently.
pub fn oscillator_residuals(ops: &MultiMode) -> ResidualReport {
    let idx = ops.interior(1);
    let id = DMatrix::<f64>::identity(ops.dim(), ops.dim());
    let q2 = ops.q * ops.q;
    let rel = (0..ops.modes)
        .map(|i| {
            let r = &ops.a[i] * &ops.ad[i] - &ops.ad[i] * &ops.a[i] * q2 - &id * ops.hbar;
            (format!("eq1[{}]", i + 1), interior_norm(&r, &idx))
        })
        .collect();
    report("eq1", ops, &idx, rel)
}

/// The five relation families of the covariant algebra:
/// `a_i a_j = q a_j a_i`, `a_i† a_j† = a_j† a_i†/q` (`i<j`),
/// `a_i a_j† = q a_j† a_i` (`i<j` and `i>j`) and
/// `a_i a_i† − q² a_i† a_i = ħ + (q² − 1) Σ_{k<i} a_k† a_k`.
pub fn suqn_residuals(ops: &MultiMode) -> ResidualReport {
    let idx = ops.interior(1);
    let n = ops.modes;
    let q = ops.q;
    let id = DMatrix::<f64>::identity(ops.dim(), ops.dim());
    let mut fam = [0.0f64; 5];
    for i in 0..n {
        for j in 0..n {
            if i < j {
                let r = &ops.a[i] * &ops.a[j] - &ops.a[j] * &ops.a[i] * q;
                fam[0] = fam[0].max(interior_norm(&r, &idx));
                let r = &ops.ad[i] * &ops.ad[j] - &ops.ad[j] * &ops.ad[i] / q;
                fam[1] = fam[1].max(interior_norm(&r, &idx));
            }
            if i != j {
                let r = &ops.a[i] * &ops.ad[j] - &ops.ad[j] * &ops.a[i] * q;
                let k = if i < j { 2 } else { 3 };
                fam[k] = fam[k].max(interior_norm(&r, &idx));
            }
        }
        let mut rhs = &id * ops.hbar;
        for k in 0..i {
            rhs += &ops.ad[k] * &ops.a[k] * (q * q - 1.0);
        }
        let r = &ops.a[i] * &ops.ad[i] - &ops.ad[i] * &ops.a[i] * (q * q) - rhs;
        fam[4] = fam[4].max(interior_norm(&r, &idx));
    }
    let names = ["9a", "9b", "10(i<j)", "10(i>j)", "11"];
    let rel = names.iter().zip(fam).map(|(s, v)| (s.to_string(), v)).collect();
    report("suqn", ops, &idx, rel)
}

/// Which relations [`relation_residuals`] checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algebra {
    Eq1,
    Suqn,
}

pub fn relation_residuals(ops: &MultiMode, algebra: Algebra) -> Result<ResidualReport> {
    if ops.a.len() != ops.modes || ops.ad.len() != ops.modes {
        return Err(Error::Size("operator list does not match mode count".into()));
    }
    if ops.a.iter().chain(&ops.ad).any(|m| m.nrows() != ops.dim() || m.ncols() != ops.dim()) {
        return Err(Error::Size("operator shape does not match basis".into()));
    }
    Ok(match algebra {
        Algebra::Eq1 => oscillator_residuals(ops),
        Algebra::Suqn => suqn_residuals(ops),
    })
}

/// `[b, b†] − ħ(1 − b†b/β)` on the interior with `q² = 1 − ħ/β`.
pub fn classical_identity_residual(trunc: usize, hbar: f64, beta: f64) -> Result<f64> {
    let q2 = 1.0 - hbar / beta;
    if !(q2 > 0.0) {
        return Err(Error::Parameter(format!("need hbar < beta, got hbar={hbar}, beta={beta}")));
    }
    let l = qoscillator_ops(trunc, hbar, q2.sqrt())?;
    let id = DMatrix::<f64>::identity(trunc, trunc);
    let r = &l.b * &l.bd - &l.bd * &l.b - (id - &l.bd * &l.b / beta) * hbar;
    let idx: Vec<usize> = (0..trunc - 1).collect();
    Ok(interior_norm(&r, &idx))
}

/// One row of the classical-limit table.
#[derive(Clone, Debug, Serialize)]
pub struct LimitRow {
    pub hbar: f64,
    pub level: usize,
    pub value: f64,
    pub target: f64,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitScan {
    pub beta: f64,
    pub action: f64,
    pub rows: Vec<LimitRow>,
    /// Log-log slope of error against `ħ` (NaN when errors vanish).
    pub order: f64,
    /// Polynomial extrapolation of the values to `ħ = 0`.
    pub extrapolated: f64,
    pub target: f64,
}

/// Eigenvalue of `b†b` at level `n` with `q² = 1 − ħ/β`:
/// `ħ[n] = β(1 − (1 − ħ/β)^n)`.
pub fn level_value(n: usize, hbar: f64, beta: f64) -> f64 {
    let x = -hbar / beta;
    -beta * (n as f64 * x.ln_1p()).exp_m1()
}

pub fn classical_limit_scan(beta: f64, action: f64, hbars: &[f64]) -> Result<LimitScan> {
    if action < 0.0 || !action.is_finite() {
        return Err(Error::Domain(format!("action must be nonnegative, got {action}")));
    }
    let target = darboux_map_qosc1(beta)?.profile(action)?;
    let mut rows = Vec::with_capacity(hbars.len());
    for &h in hbars {
        if !(h > 0.0) || h >= beta {
            return Err(Error::Parameter(format!("need 0 < hbar < beta, got {h}")));
        }
        let level = (action / h).round() as usize;
        let value = level_value(level, h, beta);
        rows.push(LimitRow {
            hbar: h,
            level,
            value,
            target,
            error: (value - target).abs(),
        });
    }
    let logs: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error > 0.0)
        .map(|r| (r.hbar.ln(), r.error.ln()))
        .collect();
    let order = if logs.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = logs.into_iter().unzip();
        least_squares_slope(&x, &y)
    } else {
        f64::NAN
    };
    let tail = rows.len().min(6);
    let pts: Vec<(f64, f64)> = rows[rows.len() - tail..].iter().map(|r| (r.hbar, r.value)).collect();
    Ok(LimitScan {
        beta,
        action,
        extrapolated: neville_at_zero(&pts),
        target,
        rows,
        order,
    })
}

/// Value at `x = 0` of the interpolating polynomial through the points.
pub fn neville_at_zero(points: &[(f64, f64)]) -> f64 {
    let mut p: Vec<f64> = points.iter().map(|t| t.1).collect();
    let x: Vec<f64> = points.iter().map(|t| t.0).collect();
    let n = p.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (x[i + m] * p[i] - x[i] * p[i + 1]) / (x[i + m] - x[i]);
        }
    }
    p.first().copied().unwrap_or(f64::NAN)
}

/// Matrix of a noncommutative polynomial with generators replaced by the
/// given matrices.
pub fn ncpoly_matrix(f: &NCPoly, gens: &HashMap<String, DMatrix<f64>>, dim: usize) -> Result<DMatrix<Complex64>> {
    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    for (w, c) in f.terms() {
        let mut m = DMatrix::<f64>::identity(dim, dim);
        for g in w {
            let gm = gens
                .get(g)
                .ok_or_else(|| Error::Symbol(format!("no matrix for generator `{g}`")))?;
            m = &m * gm;
        }
        let c = c.to_c64();
        out += m.map(|x| c * x);
    }
    Ok(out)
}

/// Largest entry of `M` on states `0..N−margin`.
pub fn interior_max(m: &DMatrix<Complex64>, margin: usize) -> f64 {
    let n = m.nrows().saturating_sub(margin);
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in 0..n {
            worst = worst.max(m[(r, c)].norm());
        }
    }
    worst
}
