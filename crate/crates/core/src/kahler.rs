//! Kähler realization of the diagonal q-deformed structure.
//!
//! Potential `φ = (β/2) Σ_i −Li₂(u_i)` with `u_i = 2 z^i z^i*/β`. Its mixed
//! second derivatives give the diagonal metric `g_i = −(1 − u_i)^{−1}`, and
//! `{A,B} = i g^{j̄k}(∂_k A ∂_j̄ B − ∂_j̄ A ∂_k B)` reproduces
//! `{z^j, z^k*} = −i(1 − u_j)δ^{jk}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::dilog::dilog;
use crate::error::{Error, Result};

const DILOG_TOL: f64 = 1e-17;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KahlerModel {
    n: usize,
    beta: f64,
}

/// Wirtinger gradient `(∂/∂z^k, ∂/∂z^k*)` of a function at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct WirtingerGradient {
    pub dz: Vec<Complex64>,
    pub dzbar: Vec<Complex64>,
}

impl WirtingerGradient {
    /// Gradient of the coordinate `z^k` (or `z^k*` when `conjugate`).
    pub fn coordinate(n: usize, k: usize, conjugate: bool) -> Self {
        let mut g = WirtingerGradient {
            dz: vec![Complex64::new(0.0, 0.0); n],
            dzbar: vec![Complex64::new(0.0, 0.0); n],
        };
        if conjugate {
            g.dzbar[k] = Complex64::new(1.0, 0.0);
        } else {
            g.dz[k] = Complex64::new(1.0, 0.0);
        }
        g
    }

    /// Gradient of the complex conjugate function `A*`.
    pub fn conjugate(&self) -> Self {
        WirtingerGradient {
            dz: self.dzbar.iter().map(|c| c.conj()).collect(),
            dzbar: self.dz.iter().map(|c| c.conj()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Curvature {
    /// `Σ_i g^{iī} R_{iī}` with `R_{ik̄} = −∂_i∂_k̄ ln|det g|`.
    pub r_impl: f64,
    /// `Σ_i (8/β)(1 − u_i)^{−1}`.
    pub r_closed: f64,
}

impl KahlerModel {
    pub fn new(n: usize, beta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("mode count must be at least 1".into()));
        }
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::Parameter(format!("beta must be finite and nonzero, got {beta}")));
        }
        Ok(KahlerModel { n, beta })
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `u_i = 2|z^i|²/β`, after checking the domain. Points on the circle
    /// `|z|² = β/2` are a singularity error; beyond it a domain error.
    fn radial(&self, z: &[Complex64]) -> Result<Vec<f64>> {
        if z.len() != self.n {
            return Err(Error::Size(format!("expected {} modes, got {}", self.n, z.len())));
        }
        z.iter()
            .map(|zi| {
                let u = 2.0 * zi.norm_sqr() / self.beta;
                if (1.0 - u).abs() <= 4.0 * f64::EPSILON {
                    Err(Error::Singularity(format!("|z|^2 = beta/2 at z = {zi}")))
                } else if u > 1.0 {
                    Err(Error::Domain(format!("|z|^2 = {} exceeds beta/2", zi.norm_sqr())))
                } else {
                    Ok(u)
                }
            })
            .collect()
    }

    pub fn potential(&self, z: &[Complex64]) -> Result<f64> {
        let u = self.radial(z)?;
        let mut phi = 0.0;
        for ui in u {
            phi -= dilog(ui, DILOG_TOL)?;
        }
        Ok(0.5 * self.beta * phi)
    }

    /// Closed-form diagonal metric `g_i = −(1 − u_i)^{−1}`.
    pub fn metric(&self, z: &[Complex64]) -> Result<Vec<f64>> {
        Ok(self.radial(z)?.into_iter().map(|u| -1.0 / (1.0 - u)).collect())
    }

    /// `g_{iī} = ¼ Δ_{(x_i, y_i)} φ` by fourth-order central differences of
    /// the potential with step `h`.
    pub fn metric_fd(&self, z: &[Complex64], h: f64) -> Result<Vec<f64>> {
        self.radial(z)?;
        let phi0 = self.potential(z)?;
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let mut lap = 0.0;
            for dir in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                let at = |s: f64| {
                    let mut w = z.to_vec();
                    w[i] += dir * (s * h);
                    self.potential(&w)
                };
                let d2 = (-at(2.0)? + 16.0 * at(1.0)? - 30.0 * phi0 + 16.0 * at(-1.0)? - at(-2.0)?)
                    / (12.0 * h * h);
                lap += d2;
            }
            out.push(0.25 * lap);
        }
        Ok(out)
    }

    /// Kähler bracket for the diagonal metric.
    pub fn bracket_kahler(
        &self,
        a: &WirtingerGradient,
        b: &WirtingerGradient,
        z: &[Complex64],
    ) -> Result<Complex64> {
        let g = self.metric(z)?;
        if a.dz.len() != self.n || b.dz.len() != self.n || a.dzbar.len() != self.n || b.dzbar.len() != self.n {
            return Err(Error::Size("gradient length differs from mode count".into()));
        }
        let i = Complex64::new(0.0, 1.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..self.n {
            if g[k] == 0.0 || !g[k].is_finite() {
                return Err(Error::Singularity("metric not invertible".into()));
            }
            acc += (a.dz[k] * b.dzbar[k] - a.dzbar[k] * b.dz[k]) / g[k];
        }
        Ok(i * acc)
    }

    /// Scalar curvature in this crate's normalization together with the
    /// reference formula `Σ (8/β)(1 − u_i)^{−1}`.
    ///
    /// The Ricci form is taken from the metric profile `g(u)` and its
    /// derivatives: with `L = ln|g|`, `∂∂̄L = (2/β)(u L'' + L')`.
    pub fn scalar_curvature(&self, z: &[Complex64]) -> Result<Curvature> {
        let u = self.radial(z)?;
        let mut r_impl = 0.0;
        let mut r_closed = 0.0;
        for ui in u {
            let (g, dg, d2g) = metric_profile(ui);
            let l1 = dg / g;
            let l2 = d2g / g - l1 * l1;
            let ricci = -(2.0 / self.beta) * (ui * l2 + l1);
            r_impl += ricci / g;
            r_closed += 8.0 / self.beta / (1.0 - ui);
        }
        Ok(Curvature { r_impl, r_closed })
    }

    /// Ricci diagonal `−∂_i∂_ī ln|det g|` by finite differences of the
    /// closed-form metric.
    pub fn ricci_fd(&self, z: &[Complex64], h: f64) -> Result<Vec<f64>> {
        let logdet = |w: &[Complex64]| -> Result<f64> {
            Ok(self.metric(w)?.iter().map(|g| g.abs().ln()).sum())
        };
        let l0 = logdet(z)?;
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let mut lap = 0.0;
            for dir in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                let at = |s: f64| {
                    let mut w = z.to_vec();
                    w[i] += dir * (s * h);
                    logdet(&w)
                };
                lap += (at(1.0)? - 2.0 * l0 + at(-1.0)?) / (h * h);
            }
            out.push(-0.25 * lap);
        }
        Ok(out)
    }

    /// `a_i = z^i ∏_{k<i} (1 − 2 z^k z^k*/β)^{1/2}`.
    pub fn mode_coupling(&self, z: &[Complex64]) -> Result<Vec<Complex64>> {
        let s = self.radicands(z)?;
        let mut out = Vec::with_capacity(self.n);
        let mut prod = 1.0;
        for i in 0..self.n {
            out.push(z[i] * prod);
            prod *= s[i].sqrt();
        }
        Ok(out)
    }

    /// `(∂a_i/∂z^m, ∂a_i/∂z^m*)` as two `n×n` matrices.
    pub fn mode_coupling_jacobian(
        &self,
        z: &[Complex64],
    ) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
        let s = self.radicands(z)?;
        let a = self.mode_coupling(z)?;
        let n = self.n;
        let mut dz = DMatrix::zeros(n, n);
        let mut dzbar = DMatrix::zeros(n, n);
        let mut prod = 1.0;
        for i in 0..n {
            dz[(i, i)] = Complex64::new(prod, 0.0);
            for k in 0..i {
                // ∂/∂z^k of s_k^{1/2} = −z^k*/(β s_k^{1/2})
                dz[(i, k)] = -a[i] * z[k].conj() / (self.beta * s[k]);
                dzbar[(i, k)] = -a[i] * z[k] / (self.beta * s[k]);
            }
            prod *= s[i].sqrt();
        }
        Ok((dz, dzbar))
    }

    /// Wirtinger gradients of `a_i` and `a_i*` at `z`.
    pub fn coupled_gradients(&self, z: &[Complex64]) -> Result<Vec<(WirtingerGradient, WirtingerGradient)>> {
        let (dz, dzbar) = self.mode_coupling_jacobian(z)?;
        Ok((0..self.n)
            .map(|i| {
                let g = WirtingerGradient {
                    dz: dz.row(i).iter().copied().collect(),
                    dzbar: dzbar.row(i).iter().copied().collect(),
                };
                let gc = g.conjugate();
                (g, gc)
            })
            .collect())
    }

    fn radicands(&self, z: &[Complex64]) -> Result<Vec<f64>> {
        if z.len() != self.n {
            return Err(Error::Size(format!("expected {} modes, got {}", self.n, z.len())));
        }
        z.iter()
            .map(|zi| {
                let s = 1.0 - 2.0 * zi.norm_sqr() / self.beta;
                if s < 0.0 {
                    Err(Error::Domain(format!("negative radicand at z = {zi}")))
                } else {
                    Ok(s)
                }
            })
            .collect()
    }
}

/// `g(u) = −(1 − u)^{−1}` and its first two derivatives in `u`.
fn metric_profile(u: f64) -> (f64, f64, f64) {
    let w = 1.0 - u;
    (-1.0 / w, -1.0 / (w * w), -2.0 / (w * w * w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn origin_values() {
        let m = KahlerModel::new(2, 1.0).unwrap();
        let z = [c(0.0, 0.0), c(0.0, 0.0)];
        assert_eq!(m.potential(&z).unwrap(), 0.0);
        assert_eq!(m.metric(&z).unwrap(), vec![-1.0, -1.0]);
        let a = WirtingerGradient::coordinate(2, 0, false);
        let b = WirtingerGradient::coordinate(2, 0, true);
        assert_eq!(m.bracket_kahler(&a, &b, &z).unwrap(), c(0.0, -1.0));
        assert_eq!(m.bracket_kahler(&a, &a, &z).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn singular_circle_and_outside() {
        let m = KahlerModel::new(1, 2.0).unwrap();
        assert!(matches!(m.metric(&[c(1.0, 0.0)]), Err(Error::Singularity(_))));
        assert!(matches!(m.metric(&[c(1.1, 0.0)]), Err(Error::Domain(_))));
        assert!(matches!(m.mode_coupling(&[c(1.1, 0.0)]), Err(Error::Domain(_))));
        assert!(KahlerModel::new(1, 0.0).is_err());
    }

    #[test]
    fn single_mode_coupling_is_identity() {
        let m = KahlerModel::new(1, 1.0).unwrap();
        assert_eq!(m.mode_coupling(&[c(0.3, 0.2)]).unwrap(), vec![c(0.3, 0.2)]);
        let m2 = KahlerModel::new(2, 1.0).unwrap();
        assert_eq!(m2.mode_coupling(&[c(0.3, 0.2), c(0.0, 0.0)]).unwrap()[1], c(0.0, 0.0));
    }
}
