//! Polynomial Poisson bivectors: brackets, Jacobi residuals, Casimirs.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::chart::CoordinateChart;
use crate::error::{Error, Result};
use crate::poly::{is_parameter, PolyExpr};
use crate::scalar::{format_rational, Rational, Scalar};

/// The deformation parameter: either an exact value or the formal symbol
/// `beta` (appearing as `beta^-1` in the bivector).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Beta {
    Symbolic,
    Value(Rational),
}

impl Beta {
    pub fn value(r: Rational) -> Result<Self> {
        if num_traits::Zero::is_zero(&r) {
            return Err(Error::Parameter("beta must be nonzero".into()));
        }
        Ok(Beta::Value(r))
    }

    pub fn from_f64(x: f64) -> Result<Self> {
        Beta::value(crate::scalar::rational_from_f64(x)?)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Beta::Symbolic => None,
            Beta::Value(r) => num_traits::ToPrimitive::to_f64(r),
        }
    }

    /// `1/beta` as a polynomial.
    pub fn inverse_poly(&self) -> PolyExpr {
        match self {
            Beta::Symbolic => PolyExpr::monomial("beta", -1),
            Beta::Value(r) => PolyExpr::constant(Scalar::real(r.recip())),
        }
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::Symbolic => write!(f, "beta"),
            Beta::Value(r) => write!(f, "{}", format_rational(r)),
        }
    }
}

/// A chart together with an antisymmetric polynomial bivector `ω^{jk}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonStructure {
    pub name: String,
    chart: CoordinateChart,
    bivector: Vec<Vec<PolyExpr>>,
    casimirs: Vec<PolyExpr>,
    beta: Beta,
}

/// One Jacobi residual component `S^{ijk}`.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobiTerm {
    pub indices: (usize, usize, usize),
    pub residual: PolyExpr,
}

impl PoissonStructure {
    /// Validates shape, antisymmetry, and that entries only mention chart
    /// symbols and parameters.
    pub fn new(
        name: impl Into<String>,
        chart: CoordinateChart,
        bivector: Vec<Vec<PolyExpr>>,
        casimirs: Vec<PolyExpr>,
        beta: Beta,
    ) -> Result<Self> {
        let n = chart.dim();
        if bivector.len() != n || bivector.iter().any(|row| row.len() != n) {
            return Err(Error::Size(format!("bivector must be {n}x{n}")));
        }
        for i in 0..n {
            for j in 0..n {
                if !(&bivector[i][j] + &bivector[j][i]).is_zero() {
                    return Err(Error::Format(format!(
                        "bivector not antisymmetric at ({}, {})",
                        chart.names()[i],
                        chart.names()[j]
                    )));
                }
                check_symbols(&bivector[i][j], &chart)?;
            }
        }
        for c in &casimirs {
            check_symbols(c, &chart)?;
        }
        Ok(PoissonStructure {
            name: name.into(),
            chart,
            bivector,
            casimirs,
            beta,
        })
    }

    /// Builds a structure from its upper-triangular brackets `{θ^i, θ^j}`.
    pub fn from_brackets(
        name: impl Into<String>,
        chart: CoordinateChart,
        brackets: &[(&str, &str, PolyExpr)],
        beta: Beta,
    ) -> Result<Self> {
        let n = chart.dim();
        let mut w = vec![vec![PolyExpr::zero(); n]; n];
        for (a, b, val) in brackets {
            let i = chart.index_of(a).ok_or_else(|| Error::Symbol(a.to_string()))?;
            let j = chart.index_of(b).ok_or_else(|| Error::Symbol(b.to_string()))?;
            w[i][j] = val.clone();
            w[j][i] = -val;
        }
        PoissonStructure::new(name, chart, w, Vec::new(), beta)
    }

    pub fn with_casimirs(mut self, casimirs: Vec<PolyExpr>) -> Result<Self> {
        for c in &casimirs {
            check_symbols(c, &self.chart)?;
        }
        self.casimirs = casimirs;
        Ok(self)
    }

    pub fn chart(&self) -> &CoordinateChart {
        &self.chart
    }

    pub fn bivector(&self) -> &[Vec<PolyExpr>] {
        &self.bivector
    }

    pub fn entry(&self, i: usize, j: usize) -> &PolyExpr {
        &self.bivector[i][j]
    }

    pub fn casimirs(&self) -> &[PolyExpr] {
        &self.casimirs
    }

    pub fn beta(&self) -> &Beta {
        &self.beta
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// Instantiates the symbolic `beta` with a value.
    pub fn with_beta(&self, value: Rational) -> Result<Self> {
        let beta = Beta::value(value.clone())?;
        let v = Scalar::real(value);
        let sub = |p: &PolyExpr| p.substitute("beta", &v);
        let bivector = self
            .bivector
            .iter()
            .map(|row| row.iter().map(sub).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let casimirs = self.casimirs.iter().map(sub).collect::<Result<Vec<_>>>()?;
        PoissonStructure::new(self.name.clone(), self.chart.clone(), bivector, casimirs, beta)
    }

    /// `{f, g} = ω^{jk} ∂_j f ∂_k g`.
    pub fn bracket(&self, f: &PolyExpr, g: &PolyExpr) -> Result<PolyExpr> {
        check_symbols(f, &self.chart)?;
        check_symbols(g, &self.chart)?;
        let names = self.chart.names();
        let df: Vec<PolyExpr> = names.iter().map(|s| f.derivative(s)).collect();
        let dg: Vec<PolyExpr> = names.iter().map(|s| g.derivative(s)).collect();
        let mut out = PolyExpr::zero();
        for (j, dfj) in df.iter().enumerate() {
            if dfj.is_zero() {
                continue;
            }
            for (k, dgk) in dg.iter().enumerate() {
                if dgk.is_zero() || self.bivector[j][k].is_zero() {
                    continue;
                }
                out = &out + &(&(&self.bivector[j][k] * dfj) * dgk);
            }
        }
        Ok(out)
    }

    /// Bracket of two chart symbols by name.
    pub fn bracket_symbols(&self, a: &str, b: &str) -> Result<PolyExpr> {
        self.bracket(&PolyExpr::var(a), &PolyExpr::var(b))
    }

    /// Contravariant Jacobi residuals
    /// `S^{ijk} = ω^{il}∂_l ω^{jk} + ω^{jl}∂_l ω^{ki} + ω^{kl}∂_l ω^{ij}`
    /// for every `i < j < k`. Components with a repeated index vanish by
    /// antisymmetry and are not listed, so a 2-dimensional structure yields
    /// an empty list.
    pub fn jacobi_residual(&self) -> Vec<JacobiTerm> {
        let n = self.dim();
        let names = self.chart.names();
        // d[l][j][k] = ∂_l ω^{jk}
        let d: Vec<Vec<Vec<PolyExpr>>> = names
            .iter()
            .map(|s| {
                self.bivector
                    .iter()
                    .map(|row| row.iter().map(|e| e.derivative(s)).collect())
                    .collect()
            })
            .collect();
        let term = |a: usize, b: usize, c: usize| {
            let mut acc = PolyExpr::zero();
            for (l, dl) in d.iter().enumerate() {
                if self.bivector[a][l].is_zero() || dl[b][c].is_zero() {
                    continue;
                }
                acc = &acc + &(&self.bivector[a][l] * &dl[b][c]);
            }
            acc
        };
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let s = &(&term(i, j, k) + &term(j, k, i)) + &term(k, i, j);
                    out.push(JacobiTerm {
                        indices: (i, j, k),
                        residual: s,
                    });
                }
            }
        }
        out
    }

    pub fn satisfies_jacobi(&self) -> bool {
        self.jacobi_residual().iter().all(|t| t.residual.is_zero())
    }

    /// True iff `{C, θ}` vanishes identically for every chart coordinate.
    pub fn casimir_check(&self, c: &PolyExpr) -> Result<bool> {
        for s in self.chart.names() {
            if !self.bracket(c, &PolyExpr::var(s))?.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Conjugates a polynomial under the chart involution.
    pub fn conjugate(&self, f: &PolyExpr) -> PolyExpr {
        f.conjugate_with(&|s| self.chart.partner(s))
    }

    /// Bivector evaluated at a complex point (chart order). Requires a
    /// numeric `beta`.
    pub fn bivector_at(&self, point: &[Complex64]) -> Result<DMatrix<Complex64>> {
        let n = self.dim();
        if point.len() != n {
            return Err(Error::Size(format!("point has {} components, chart has {n}", point.len())));
        }
        let env = self.environment(point)?;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.bivector[i][j].evaluate(&env)?;
            }
        }
        Ok(m)
    }

    fn environment(&self, point: &[Complex64]) -> Result<HashMap<String, Complex64>> {
        let mut env: HashMap<String, Complex64> = self
            .chart
            .names()
            .iter()
            .cloned()
            .zip(point.iter().copied())
            .collect();
        if let Some(b) = self.beta.as_f64() {
            env.insert("beta".into(), Complex64::new(b, 0.0));
        }
        Ok(env)
    }

    /// Covariant Jacobi check `∂_k ω_ij + cycle(k,i,j)` at a point where the
    /// bivector is invertible. Returns the largest absolute component.
    ///
    /// Uses `∂_k ω_lower = −ω_lower (∂_k ω^upper) ω_lower`.
    pub fn covariant_jacobi_at(&self, point: &[Complex64]) -> Result<f64> {
        let n = self.dim();
        let upper = self.bivector_at(point)?;
        let lower = upper
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Degeneracy("bivector not invertible at point".into()))?;
        let env = self.environment(point)?;
        let mut dlower = Vec::with_capacity(n);
        for s in self.chart.names() {
            let mut du = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    du[(i, j)] = self.bivector[i][j].derivative(s).evaluate(&env)?;
                }
            }
            dlower.push(-(&lower * du * &lower));
        }
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let r = dlower[k][(i, j)] + dlower[i][(j, k)] + dlower[j][(k, i)];
                    worst = worst.max(r.norm());
                }
            }
        }
        Ok(worst)
    }

    pub fn is_antisymmetric(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| (&self.bivector[i][j] + &self.bivector[j][i]).is_zero()))
    }
}

fn check_symbols(p: &PolyExpr, chart: &CoordinateChart) -> Result<()> {
    for s in p.symbols() {
        if !is_parameter(&s) && !chart.contains(&s) {
            return Err(Error::Symbol(s));
        }
    }
    Ok(())
}
