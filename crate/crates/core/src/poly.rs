//! Exact multivariate polynomials over complex-rational scalars.
//!
//! Chart symbols carry nonnegative exponents. The reserved parameter
//! symbols (`beta`, `hbar`, `q`) may also carry negative exponents, which
//! is how `1/beta` is held symbolically.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Reserved parameter symbols.
pub const PARAMETERS: [&str; 3] = ["beta", "hbar", "q"];

pub fn is_parameter(name: &str) -> bool {
    PARAMETERS.contains(&name)
}

/// A monomial: symbol → nonzero exponent.
pub type Monomial = BTreeMap<String, i32>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PolyExpr {
    terms: BTreeMap<Monomial, Scalar>,
}

impl PolyExpr {
    pub fn zero() -> Self {
        PolyExpr::default()
    }

    pub fn one() -> Self {
        PolyExpr::constant(Scalar::one())
    }

    pub fn constant(c: Scalar) -> Self {
        let mut p = PolyExpr::zero();
        p.add_term(Monomial::new(), c);
        p
    }

    pub fn int(n: i64) -> Self {
        PolyExpr::constant(Scalar::from_int(n))
    }

    pub fn var(name: &str) -> Self {
        PolyExpr::monomial(name, 1)
    }

    /// `name^exp`; negative exponents are only allowed for parameters.
    pub fn monomial(name: &str, exp: i32) -> Self {
        debug_assert!(exp >= 0 || is_parameter(name));
        let mut m = Monomial::new();
        if exp != 0 {
            m.insert(name.to_string(), exp);
        }
        let mut p = PolyExpr::zero();
        p.add_term(m, Scalar::one());
        p
    }

    /// Builds from raw terms, merging duplicates and dropping zeros.
    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Scalar)>) -> Self {
        let mut p = PolyExpr::zero();
        for (m, c) in terms {
            let m = m.into_iter().filter(|(_, e)| *e != 0).collect();
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += &c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant coefficient if the polynomial has no symbols.
    pub fn as_constant(&self) -> Option<Scalar> {
        match self.terms.len() {
            0 => Some(Scalar::zero()),
            1 => self.terms.get(&Monomial::new()).cloned(),
            _ => None,
        }
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        if c.is_zero() {
            return PolyExpr::zero();
        }
        PolyExpr {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, exp: u32) -> Self {
        let mut acc = PolyExpr::one();
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    /// All symbols occurring with a nonzero exponent.
    pub fn symbols(&self) -> BTreeSet<String> {
        self.terms
            .keys()
            .flat_map(|m| m.keys().cloned())
            .collect()
    }

    /// Symbols that are not reserved parameters.
    pub fn free_symbols(&self) -> BTreeSet<String> {
        self.symbols()
            .into_iter()
            .filter(|s| !is_parameter(s))
            .collect()
    }

    /// Partial derivative with respect to a symbol.
    pub fn derivative(&self, name: &str) -> Self {
        let mut out = PolyExpr::zero();
        for (m, c) in &self.terms {
            if let Some(&e) = m.get(name) {
                let mut dm = m.clone();
                if e == 1 {
                    dm.remove(name);
                } else {
                    dm.insert(name.to_string(), e - 1);
                }
                out.add_term(dm, c * &Scalar::from_int(e as i64));
            }
        }
        out
    }

    /// Replaces a symbol by a scalar value. Negative exponents invert it.
    pub fn substitute(&self, name: &str, value: &Scalar) -> Result<Self> {
        let mut out = PolyExpr::zero();
        for (m, c) in &self.terms {
            match m.get(name) {
                Some(&e) => {
                    let mut rest = m.clone();
                    rest.remove(name);
                    out.add_term(rest, c * &value.powi(e)?);
                }
                None => out.add_term(m.clone(), c.clone()),
            }
        }
        Ok(out)
    }

    /// Replaces a symbol by a polynomial; the symbol must only appear with
    /// nonnegative exponents.
    pub fn substitute_poly(&self, name: &str, value: &PolyExpr) -> Result<Self> {
        let mut out = PolyExpr::zero();
        let mut cache: HashMap<i32, PolyExpr> = HashMap::new();
        for (m, c) in &self.terms {
            let mut rest = m.clone();
            let e = rest.remove(name).unwrap_or(0);
            if e < 0 {
                return Err(Error::Parameter(format!(
                    "cannot substitute a polynomial for `{name}` with negative exponent"
                )));
            }
            let power = cache.entry(e).or_insert_with(|| value.pow(e as u32)).clone();
            let term = PolyExpr::from_terms([(rest, c.clone())]);
            out = &out + &(&term * &power);
        }
        Ok(out)
    }

    /// Renames symbols and conjugates coefficients: the antilinear map
    /// induced by a chart involution.
    pub fn conjugate_with(&self, pairing: &dyn Fn(&str) -> String) -> Self {
        PolyExpr::from_terms(self.terms.iter().map(|(m, c)| {
            let m2: Monomial = m.iter().map(|(s, e)| (pairing(s), *e)).collect();
            (m2, c.conj())
        }))
    }

    /// Total degree counted over the given symbols.
    pub fn degree_in(&self, vars: &[String]) -> Option<i32> {
        self.terms
            .keys()
            .map(|m| vars.iter().map(|v| m.get(v).copied().unwrap_or(0)).sum())
            .max()
    }

    /// Splits into components homogeneous in `vars`, keyed by degree.
    pub fn homogeneous_parts(&self, vars: &[String]) -> BTreeMap<i32, PolyExpr> {
        let mut parts: BTreeMap<i32, PolyExpr> = BTreeMap::new();
        for (m, c) in &self.terms {
            let d: i32 = vars.iter().map(|v| m.get(v).copied().unwrap_or(0)).sum();
            parts
                .entry(d)
                .or_default()
                .add_term(m.clone(), c.clone());
        }
        parts
    }

    /// Exact evaluation. Every symbol of `self` must be bound.
    pub fn evaluate_exact(&self, point: &BTreeMap<String, Scalar>) -> Result<Scalar> {
        let mut acc = Scalar::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (s, e) in m {
                let v = point.get(s).ok_or_else(|| Error::Symbol(s.clone()))?;
                t = &t * &v.powi(*e)?;
            }
            acc += &t;
        }
        Ok(acc)
    }

    /// Floating-point evaluation. Every symbol of `self` must be bound.
    pub fn evaluate(&self, point: &HashMap<String, Complex64>) -> Result<Complex64> {
        let mut acc = Complex64::zero();
        for (m, c) in &self.terms {
            let mut t = c.to_c64();
            for (s, e) in m {
                let v = point.get(s).ok_or_else(|| Error::Symbol(s.clone()))?;
                t *= v.powi(*e);
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Compiles to a fast evaluator over a fixed variable order.
    pub fn compile(&self, vars: &[String]) -> Result<CompiledPoly> {
        let index: HashMap<&str, usize> =
            vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let mut terms = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let mut factors = Vec::with_capacity(m.len());
            for (s, e) in m {
                let i = *index.get(s.as_str()).ok_or_else(|| Error::Symbol(s.clone()))?;
                factors.push((i, *e));
            }
            terms.push((c.to_c64(), factors));
        }
        Ok(CompiledPoly { terms })
    }
}

/// Floating-point evaluator produced by [`PolyExpr::compile`].
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    terms: Vec<(Complex64, Vec<(usize, i32)>)>,
}

impl CompiledPoly {
    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(c, fs)| fs.iter().fold(*c, |acc, &(i, e)| acc * x[i].powi(e)))
            .sum()
    }

    /// Evaluation at a real point.
    pub fn eval_real(&self, x: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(c, fs)| fs.iter().fold(*c, |acc, &(i, e)| acc * x[i].powi(e)))
            .sum()
    }
}

impl<'a> Add<&'a PolyExpr> for &'a PolyExpr {
    type Output = PolyExpr;
    fn add(self, rhs: &PolyExpr) -> PolyExpr {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<'a> Sub<&'a PolyExpr> for &'a PolyExpr {
    type Output = PolyExpr;
    fn sub(self, rhs: &PolyExpr) -> PolyExpr {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl<'a> Mul<&'a PolyExpr> for &'a PolyExpr {
    type Output = PolyExpr;
    fn mul(self, rhs: &PolyExpr) -> PolyExpr {
        let mut out = PolyExpr::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                let mut m = m1.clone();
                for (s, e) in m2 {
                    let slot = m.entry(s.clone()).or_insert(0);
                    *slot += e;
                    if *slot == 0 {
                        m.remove(s);
                    }
                }
                out.add_term(m, c1 * c2);
            }
        }
        out
    }
}

impl Neg for &PolyExpr {
    type Output = PolyExpr;
    fn neg(self) -> PolyExpr {
        self.scale(&Scalar::from_int(-1))
    }
}

impl Add for PolyExpr {
    type Output = PolyExpr;
    fn add(self, rhs: PolyExpr) -> PolyExpr {
        &self + &rhs
    }
}

impl Sub for PolyExpr {
    type Output = PolyExpr;
    fn sub(self, rhs: PolyExpr) -> PolyExpr {
        &self - &rhs
    }
}

impl Mul for PolyExpr {
    type Output = PolyExpr;
    fn mul(self, rhs: PolyExpr) -> PolyExpr {
        &self * &rhs
    }
}

impl Neg for PolyExpr {
    type Output = PolyExpr;
    fn neg(self) -> PolyExpr {
        -&self
    }
}

impl fmt::Display for PolyExpr {
    /// Prints in the CLI expression grammar so the output re-parses.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            let mut factors: Vec<String> = Vec::new();
            let mut divisors: Vec<String> = Vec::new();
            for (s, e) in m {
                let sym = s.clone();
                let rendered = |p: i32| {
                    if p == 1 {
                        sym.clone()
                    } else {
                        format!("{sym}^{p}")
                    }
                };
                if *e > 0 {
                    factors.push(rendered(*e));
                } else {
                    divisors.push(rendered(-*e));
                }
            }
            let coeff = c.to_string();
            let needs_coeff = !c.is_one() || factors.is_empty();
            let mut body = Vec::new();
            if needs_coeff {
                body.push(coeff);
            }
            body.extend(factors);
            write!(f, "{}", body.join(" * "))?;
            for d in divisors {
                write!(f, " / {d}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> PolyExpr {
        PolyExpr::var(s)
    }

    #[test]
    fn cancellation_leaves_no_zero_terms() {
        let p = &(&v("x") * &v("p")) - &(&v("p") * &v("x"));
        assert!(p.is_zero());
        assert_eq!(p.num_terms(), 0);
    }

    #[test]
    fn derivative_and_substitution() {
        // x^3 p / beta
        let p = &(&v("x").pow(3) * &v("p")) * &PolyExpr::monomial("beta", -1);
        let dx = p.derivative("x");
        let expected = &(&v("x").pow(2) * &v("p")) * &PolyExpr::monomial("beta", -1);
        assert_eq!(dx, expected.scale(&Scalar::from_int(3)));
        let at = p.substitute("beta", &Scalar::from_int(2)).unwrap();
        assert_eq!(at, (&v("x").pow(3) * &v("p")).scale(&Scalar::from_ratio(1, 2)));
    }

    #[test]
    fn exact_and_float_evaluation_agree() {
        let p = &(&PolyExpr::one() - &(&v("b*") * &v("b")))
            * &PolyExpr::constant(Scalar::new(crate::scalar::rat(1, 3), crate::scalar::rat(-1, 7)));
        let mut exact = BTreeMap::new();
        exact.insert("b".to_string(), Scalar::from_ratio(1, 5));
        exact.insert("b*".to_string(), Scalar::from_ratio(2, 9));
        let mut float = HashMap::new();
        float.insert("b".to_string(), Complex64::new(0.2, 0.0));
        float.insert("b*".to_string(), Complex64::new(2.0 / 9.0, 0.0));
        let e = p.evaluate_exact(&exact).unwrap().to_c64();
        let f = p.evaluate(&float).unwrap();
        assert!((e - f).norm() <= 1e-15);
    }

    #[test]
    fn unbound_symbol_is_reported() {
        let err = v("x").evaluate_exact(&BTreeMap::new()).unwrap_err();
        assert_eq!(err, Error::Symbol("x".into()));
    }

    #[test]
    fn homogeneous_split() {
        let vars = vec!["x".to_string(), "p".to_string()];
        let p = &(&PolyExpr::one() + &(&v("x") * &v("p"))) + &v("x");
        let parts = p.homogeneous_parts(&vars);
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[&2], &v("x") * &v("p"));
    }
}
