//! Adaptive Gauss–Legendre quadrature for vector-valued integrands.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const ORDER: usize = 12;
const MAX_DEPTH: u32 = 40;

/// Nodes and weights on `[-1, 1]`, computed once by Newton iteration on
/// the Legendre polynomial.
fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn panel<F>(f: &F, a: f64, b: f64, dim: usize) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let (nodes, weights) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = vec![0.0; dim];
    for (x, w) in nodes.iter().zip(weights) {
        let v = f(mid + half * x)?;
        if v.len() != dim || v.iter().any(|y| !y.is_finite()) {
            return Err(Error::Quadrature(format!(
                "integrand not finite near {}",
                mid + half * x
            )));
        }
        for (s, y) in acc.iter_mut().zip(v) {
            *s += w * half * y;
        }
    }
    Ok(acc)
}

/// Integrates `f` over `[a, b]` componentwise until the difference between
/// a panel and its two halves is at most `tol` (max norm).
pub fn integrate<F>(f: F, a: f64, b: f64, dim: usize, tol: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    if !(tol > 0.0) {
        return Err(Error::Parameter("quadrature tolerance must be positive".into()));
    }
    let whole = panel(&f, a, b, dim)?;
    recurse(&f, a, b, dim, tol, whole, 0)
}

fn recurse<F>(f: &F, a: f64, b: f64, dim: usize, tol: f64, whole: Vec<f64>, depth: u32) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let m = 0.5 * (a + b);
    let left = panel(f, a, m, dim)?;
    let right = panel(f, m, b, dim)?;
    let diff = whole
        .iter()
        .zip(left.iter().zip(&right))
        .map(|(w, (l, r))| (l + r - w).abs())
        .fold(0.0, f64::max);
    if diff <= tol {
        return Ok(left.iter().zip(&right).map(|(l, r)| l + r).collect());
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Quadrature(format!("no convergence on [{a}, {b}]")));
    }
    let l = recurse(f, a, m, dim, 0.5 * tol, left, depth + 1)?;
    let r = recurse(f, m, b, dim, 0.5 * tol, right, depth + 1)?;
    Ok(l.iter().zip(&r).map(|(x, y)| x + y).collect())
}
