//! Real-branch Euler dilogarithm `Li₂(x) = Σ_{k≥1} x^k/k²` for `x ≤ 1`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const ZETA2: f64 = PI * PI / 6.0;

/// `Li₂(x)` to absolute accuracy `tol`.
///
/// The power series is only summed for `|x| ≤ 1/2`. Negative arguments go
/// through Landen's identity `Li₂(x) = −Li₂(x/(x−1)) − ½ln²(1−x)`, and
/// arguments in `(1/2, 1]` through the reflection
/// `Li₂(x) + Li₂(1−x) = π²/6 − ln x ln(1−x)`.
pub fn dilog(x: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    if x.is_nan() || x > 1.0 {
        return Err(Error::Domain(format!("Li2 real branch needs x <= 1, got {x}")));
    }
    if x == 1.0 {
        return Ok(ZETA2);
    }
    if x < 0.0 {
        let y = x / (x - 1.0);
        let l = (-x).ln_1p();
        return Ok(-nonnegative(y, tol)? - 0.5 * l * l);
    }
    nonnegative(x, tol)
}

fn nonnegative(x: f64, tol: f64) -> Result<f64> {
    if x <= 0.5 {
        return Ok(series(x, tol));
    }
    if x == 1.0 {
        return Ok(ZETA2);
    }
    let y = 1.0 - x;
    Ok(ZETA2 - x.ln() * y.ln() - series(y, tol))
}

/// Direct summation for `0 ≤ x ≤ 1/2`; the tail after term `k` is bounded
/// by `x^{k+1}/((k+1)²(1−x))`.
fn series(x: f64, tol: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = 1.0;
    for k in 1..=10_000u32 {
        power *= x;
        let kf = f64::from(k);
        sum += power / (kf * kf);
        let tail = power * x / ((kf + 1.0) * (kf + 1.0) * (1.0 - x));
        if tail <= tol * 0.5 || tail < f64::EPSILON * sum.abs() * 1e-2 {
            break;
        }
    }
    sum
}

/// `dLi₂/dx = −ln(1−x)/x`, with the limit 1 at `x = 0`.
pub fn dilog_derivative(x: f64) -> Result<f64> {
    if x >= 1.0 {
        return Err(Error::Domain(format!("Li2' diverges at x = {x}")));
    }
    if x.abs() < 1e-8 {
        return Ok(1.0 + x / 2.0 + x * x / 3.0);
    }
    Ok(-(-x).ln_1p() / x)
}
