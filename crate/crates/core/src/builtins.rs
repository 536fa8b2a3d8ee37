//! Shipped quadratic Poisson structures.

use std::fmt;
use std::str::FromStr;

use crate::chart::CoordinateChart;
use crate::error::{Error, Result};
use crate::poisson::{Beta, PoissonStructure};
use crate::poly::PolyExpr;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    /// Constant structure `{x_i, p_i} = 1`.
    Canonical(usize),
    /// One-mode q-oscillator, `{b, b*} = −i(1 − b*b/β)`.
    Qosc1,
    /// q-particle, `{x, p} = 1 + xp/β`.
    Qparticle,
    /// Degenerate lattice structure on `(x, p, p*)` with its Casimir.
    Lattice,
    /// SU_q(n)-covariant brackets on `a_i, a_i*`.
    Suqn(usize),
    /// Diagonal structure `{z^j, z^k*} = −i(1 − 2 z^j z^j*/β) δ^{jk}`.
    Diag(usize),
}

impl Builtin {
    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Canonical(_) => "canonical",
            Builtin::Qosc1 => "qosc1",
            Builtin::Qparticle => "qparticle",
            Builtin::Lattice => "lattice",
            Builtin::Suqn(_) => "suqn",
            Builtin::Diag(_) => "diag",
        }
    }

    /// Parses a name; `n` is used by the families that take a mode count.
    pub fn parse(name: &str, n: usize) -> Result<Self> {
        Ok(match name {
            "canonical" => Builtin::Canonical(n),
            "qosc1" => Builtin::Qosc1,
            "qparticle" => Builtin::Qparticle,
            "lattice" => Builtin::Lattice,
            "suqn" => Builtin::Suqn(n),
            "diag" => Builtin::Diag(n),
            other => return Err(Error::Parameter(format!("unknown structure `{other}`"))),
        })
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::Canonical(n) | Builtin::Suqn(n) | Builtin::Diag(n) => {
                write!(f, "{}({n})", self.name())
            }
            _ => write!(f, "{}", self.name()),
        }
    }
}

impl FromStr for Builtin {
    type Err = Error;

    /// Accepts `qosc1`, `suqn(3)`, `canonical(2)`, ...
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('(') {
            Some((name, rest)) => {
                let n = rest
                    .strip_suffix(')')
                    .and_then(|d| d.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parameter(format!("bad structure `{s}`")))?;
                Builtin::parse(name, n)
            }
            None => Builtin::parse(s, 1),
        }
    }
}

fn v(s: &str) -> PolyExpr {
    PolyExpr::var(s)
}

fn c(re: i64, im: i64) -> PolyExpr {
    PolyExpr::constant(Scalar::new(crate::scalar::rat(re, 1), crate::scalar::rat(im, 1)))
}

fn indexed(base: &str, n: usize, i: usize) -> String {
    if n == 1 && base != "a" && base != "z" {
        base.to_string()
    } else {
        format!("{base}{}", i + 1)
    }
}

/// Builds a shipped structure. `beta` may be symbolic.
pub fn builtin(which: Builtin, beta: Beta) -> Result<PoissonStructure> {
    if let Beta::Value(r) = &beta {
        if num_traits::Zero::is_zero(r) {
            return Err(Error::Parameter("beta must be nonzero".into()));
        }
    }
    let inv = beta.inverse_poly();
    let name = which.to_string();
    match which {
        Builtin::Canonical(n) | Builtin::Suqn(n) | Builtin::Diag(n) if n == 0 => {
            Err(Error::Parameter("mode count must be at least 1".into()))
        }
        Builtin::Canonical(n) => {
            let xs: Vec<String> = (0..n).map(|i| indexed("x", n, i)).collect();
            let ps: Vec<String> = (0..n).map(|i| indexed("p", n, i)).collect();
            let chart = CoordinateChart::real(xs.iter().chain(ps.iter()).cloned());
            let brackets: Vec<(&str, &str, PolyExpr)> = xs
                .iter()
                .zip(&ps)
                .map(|(x, p)| (x.as_str(), p.as_str(), PolyExpr::one()))
                .collect();
            PoissonStructure::from_brackets(name, chart, &brackets, beta)
        }
        Builtin::Qosc1 => {
            let chart = CoordinateChart::holomorphic(["b"]);
            // −i(1 − b*b/β)
            let val = &c(0, -1) * &(&PolyExpr::one() - &(&(&v("b*") * &v("b")) * &inv));
            PoissonStructure::from_brackets(name, chart, &[("b", "b*", val)], beta)
        }
        Builtin::Qparticle => {
            let chart = CoordinateChart::real(["x", "p"]);
            let val = &PolyExpr::one() + &(&(&v("x") * &v("p")) * &inv);
            PoissonStructure::from_brackets(name, chart, &[("x", "p", val)], beta)
        }
        Builtin::Lattice => {
            let chart = CoordinateChart::mixed(
                vec!["x".into(), "p".into(), "p*".into()],
                vec![0, 2, 1],
            )?;
            let xp = &(&v("x") * &v("p")) * &inv;
            let xps = &(&v("x") * &v("p*")) * &inv;
            let pps = &(&v("p") * &v("p*")) * &inv;
            let brackets = [
                ("x", "p", &PolyExpr::one() - &(&c(0, 1) * &xp)),
                ("x", "p*", &PolyExpr::one() + &(&c(0, 1) * &xps)),
                ("p*", "p", &c(0, 1) * &pps),
            ];
            let casimir = lattice_casimir(&beta);
            PoissonStructure::from_brackets(name, chart, &brackets, beta)?
                .with_casimirs(vec![casimir])
        }
        Builtin::Suqn(n) => {
            let base: Vec<String> = (0..n).map(|i| indexed("a", n, i)).collect();
            let chart = CoordinateChart::holomorphic(&base);
            let star: Vec<String> = base.iter().map(|s| format!("{s}*")).collect();
            let mut brackets: Vec<(String, String, PolyExpr)> = Vec::new();
            for k in 0..n {
                for j in 0..n {
                    if k < j {
                        brackets.push((
                            base[k].clone(),
                            base[j].clone(),
                            &c(0, 1) * &(&(&v(&base[k]) * &v(&base[j])) * &inv),
                        ));
                        brackets.push((
                            star[k].clone(),
                            star[j].clone(),
                            &c(0, -1) * &(&(&v(&star[k]) * &v(&star[j])) * &inv),
                        ));
                    }
                    if k != j {
                        brackets.push((
                            base[k].clone(),
                            star[j].clone(),
                            &c(0, 1) * &(&(&v(&base[k]) * &v(&star[j])) * &inv),
                        ));
                    }
                }
                // −i(1 − (2/β) Σ_{m≤k} a_m* a_m)
                let mut sum = PolyExpr::zero();
                for m in 0..=k {
                    sum = &sum + &(&v(&star[m]) * &v(&base[m]));
                }
                let val = &c(0, -1) * &(&PolyExpr::one() - &(&(&sum * &inv) * &c(2, 0)));
                brackets.push((base[k].clone(), star[k].clone(), val));
            }
            let refs: Vec<(&str, &str, PolyExpr)> = brackets
                .iter()
                .map(|(a, b, p)| (a.as_str(), b.as_str(), p.clone()))
                .collect();
            PoissonStructure::from_brackets(name, chart, &refs, beta)
        }
        Builtin::Diag(n) => {
            let base: Vec<String> = (0..n).map(|i| indexed("z", n, i)).collect();
            let chart = CoordinateChart::holomorphic(&base);
            let mut brackets = Vec::new();
            for z in &base {
                let zs = format!("{z}*");
                let val = &c(0, -1)
                    * &(&PolyExpr::one() - &(&(&(&v(z) * &v(&zs)) * &inv) * &c(2, 0)));
                brackets.push((z.clone(), zs, val));
            }
            let refs: Vec<(&str, &str, PolyExpr)> = brackets
                .iter()
                .map(|(a, b, p)| (a.as_str(), b.as_str(), p.clone()))
                .collect();
            PoissonStructure::from_brackets(name, chart, &refs, beta)
        }
    }
}

/// `C = p p* x/β − i(p − p*)`, the lattice Casimir.
pub fn lattice_casimir(beta: &Beta) -> PolyExpr {
    let inv = beta.inverse_poly();
    let first = &(&(&v("p") * &v("p*")) * &v("x")) * &inv;
    &first - &(&c(0, 1) * &(&v("p") - &v("p*")))
}

/// Every shipped structure at the sizes used by the test suites.
pub fn catalogue(max_modes: usize) -> Vec<Builtin> {
    let mut out = Vec::new();
    for n in 1..=max_modes.max(1) {
        out.push(Builtin::Canonical(n));
    }
    out.extend([Builtin::Qosc1, Builtin::Qparticle, Builtin::Lattice]);
    for n in 1..=max_modes.clamp(1, 3) {
        out.push(Builtin::Suqn(n));
        out.push(Builtin::Diag(n));
    }
    out
}
