//! Action-angle (Darboux) coordinates for the one-mode q-oscillator bracket
//! `{b, b*} = −i(1 − b*b/β)`.
//!
//! With `{φ, I} = 1`, the map `b = g(I) e^{−iφ}` pushes the canonical
//! bracket forward to the deformed one exactly when
//! `d(g²)/dI = 1 − g²/β`, `g(0) = 0`, i.e. `g² = β(1 − e^{−I/β})`.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DarbouxMap {
    beta: f64,
}

/// Partial derivatives of `(b, b*)` with respect to `(I, φ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DarbouxJacobian {
    pub db_di: Complex64,
    pub db_dphi: Complex64,
    pub dbs_di: Complex64,
    pub dbs_dphi: Complex64,
}

pub fn darboux_map_qosc1(beta: f64) -> Result<DarbouxMap> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Parameter(format!("beta must be positive, got {beta}")));
    }
    Ok(DarbouxMap { beta })
}

impl DarbouxMap {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `|b|² = β(1 − e^{−I/β})` as a function of the action.
    pub fn profile(&self, action: f64) -> Result<f64> {
        check_action(action)?;
        Ok(-self.beta * (-action / self.beta).exp_m1())
    }

    pub fn map(&self, action: f64, angle: f64) -> Result<(Complex64, Complex64)> {
        let g = self.profile(action)?.sqrt();
        let b = Complex64::from_polar(g, -angle);
        Ok((b, b.conj()))
    }

    /// Defined for `I > 0`; the origin is a coordinate singularity of the
    /// polar chart.
    pub fn jacobian(&self, action: f64, angle: f64) -> Result<DarbouxJacobian> {
        check_action(action)?;
        if action == 0.0 {
            return Err(Error::Singularity("action-angle chart at I = 0".into()));
        }
        let g = self.profile(action)?.sqrt();
        let dg = (-action / self.beta).exp() / (2.0 * g);
        let phase = Complex64::from_polar(1.0, -angle);
        Ok(DarbouxJacobian {
            db_di: phase * dg,
            db_dphi: Complex64::new(0.0, -1.0) * phase * g,
            dbs_di: phase.conj() * dg,
            dbs_dphi: Complex64::new(0.0, 1.0) * phase.conj() * g,
        })
    }

    /// Inverse map for `|b|² < β`.
    pub fn inverse(&self, b: Complex64) -> Result<(f64, f64)> {
        let r2 = b.norm_sqr();
        if r2 >= self.beta {
            return Err(Error::Domain(format!("|b|^2 = {r2} must be below beta")));
        }
        let action = -self.beta * (-r2 / self.beta).ln_1p();
        Ok((action, -b.arg()))
    }

    /// `{b, b*}` computed from the canonical bracket `{φ, I} = 1` by the
    /// chain rule.
    pub fn pushforward_bracket(&self, action: f64, angle: f64) -> Result<Complex64> {
        let j = self.jacobian(action, angle)?;
        Ok(j.db_dphi * j.dbs_di - j.db_di * j.dbs_dphi)
    }
}

fn check_action(action: f64) -> Result<()> {
    if action < 0.0 || !action.is_finite() {
        return Err(Error::Domain(format!("action must be nonnegative, got {action}")));
    }
    Ok(())
}
