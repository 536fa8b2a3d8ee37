//! Noncommutative polynomials and normal ordering by rewriting.
//!
//! A [`RewriteSystem`] fixes an ordered alphabet and one rule for each
//! wrong-order adjacent pair `g h` (`g > h`). Every right-hand word is either
//! shorter than two letters or exactly `h g`, so each step lowers
//! `(length, inversions)` and reduction always terminates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational, rat, Rational, Scalar};

pub type Word = Vec<String>;

/// Linear combination of words with exact complex-rational coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NCPoly {
    terms: BTreeMap<Word, Scalar>,
}

impl NCPoly {
    pub fn zero() -> Self {
        NCPoly::default()
    }

    pub fn constant(c: Scalar) -> Self {
        NCPoly::term(c, Vec::new())
    }

    pub fn term(c: Scalar, word: Word) -> Self {
        let mut p = NCPoly::zero();
        p.add_term(word, c);
        p
    }

    /// A single word with coefficient one, written as space-separated
    /// generators (`"b b+ b+"`).
    pub fn word(text: &str) -> Self {
        NCPoly::term(Scalar::from_int(1), text.split_whitespace().map(str::to_string).collect())
    }

    pub fn gen(name: &str) -> Self {
        NCPoly::term(Scalar::from_int(1), vec![name.to_string()])
    }

    pub fn add_term(&mut self, word: Word, c: Scalar) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(word).or_insert_with(Scalar::zero);
        *entry += &c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Scalar)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, word: &[&str]) -> Scalar {
        let w: Word = word.iter().map(|s| s.to_string()).collect();
        self.terms.get(&w).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: &Scalar) -> NCPoly {
        let mut out = NCPoly::zero();
        for (w, v) in &self.terms {
            out.add_term(w.clone(), v * c);
        }
        out
    }

    pub fn generators(&self) -> BTreeSet<String> {
        self.terms.keys().flatten().cloned().collect()
    }

    /// Maximum word length.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }
}

impl std::ops::Add for &NCPoly {
    type Output = NCPoly;
    fn add(self, rhs: &NCPoly) -> NCPoly {
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }
}

impl std::ops::Sub for &NCPoly {
    type Output = NCPoly;
    fn sub(self, rhs: &NCPoly) -> NCPoly {
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.add_term(w.clone(), -c);
        }
        out
    }
}

/// Concatenation product (no reordering).
impl std::ops::Mul for &NCPoly {
    type Output = NCPoly;
    fn mul(self, rhs: &NCPoly) -> NCPoly {
        let mut out = NCPoly::zero();
        for (a, x) in &self.terms {
            for (b, y) in &rhs.terms {
                let mut w = a.clone();
                w.extend(b.iter().cloned());
                out.add_term(w, x * y);
            }
        }
        out
    }
}

impl fmt::Display for NCPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (w, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if w.is_empty() {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}*{}", w.join(" "))?;
            }
        }
        Ok(())
    }
}

/// Which wrong-order pair is rewritten first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Leftmost,
    Rightmost,
}

/// Ordered alphabet, dagger map and oriented rules.
#[derive(Clone, Debug)]
pub struct RewriteSystem {
    name: String,
    alphabet: Vec<String>,
    dagger: Vec<usize>,
    rules: BTreeMap<(usize, usize), Vec<(Vec<usize>, Scalar)>>,
}

impl RewriteSystem {
    /// `dagger` maps each generator to its adjoint (an involution); rules are
    /// given as `(g, h, rhs)` for `g > h` in alphabet order.
    pub fn new(
        name: &str,
        alphabet: &[&str],
        dagger: &[(&str, &str)],
        rules: Vec<(&str, &str, NCPoly)>,
    ) -> Result<Self> {
        let alphabet: Vec<String> = alphabet.iter().map(|s| s.to_string()).collect();
        let distinct: BTreeSet<&String> = alphabet.iter().collect();
        if distinct.len() != alphabet.len() || alphabet.iter().any(|g| g.is_empty() || g.contains(char::is_whitespace)) {
            return Err(Error::Construction("alphabet must be distinct nonblank names".into()));
        }
        let mut sys = RewriteSystem {
            name: name.to_string(),
            dagger: (0..alphabet.len()).collect(),
            alphabet,
            rules: BTreeMap::new(),
        };
        for (a, b) in dagger {
            let (i, j) = (sys.index(a)?, sys.index(b)?);
            sys.dagger[i] = j;
            sys.dagger[j] = i;
        }
        for (g, h, rhs) in rules {
            let (gi, hi) = (sys.index(g)?, sys.index(h)?);
            if gi <= hi {
                return Err(Error::Construction(format!(
                    "rule `{g} {h}` is not a wrong-order pair"
                )));
            }
            let mut out = Vec::new();
            for (w, c) in rhs.terms() {
                let wi = sys.indices(w)?;
                let ok = wi.len() < 2 || wi == [hi, gi];
                if !ok {
                    return Err(Error::Construction(format!(
                        "rule `{g} {h}` produces `{}`; termination requires words shorter than 2 or `{h} {g}`",
                        w.join(" ")
                    )));
                }
                out.push((wi, c.clone()));
            }
            if sys.rules.insert((gi, hi), out).is_some() {
                return Err(Error::Construction(format!("duplicate rule for `{g} {h}`")));
            }
        }
        Ok(sys)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    fn index(&self, g: &str) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|a| a == g)
            .ok_or_else(|| Error::Symbol(format!("unknown generator `{g}` in system `{}`", self.name)))
    }

    fn indices(&self, w: &[String]) -> Result<Vec<usize>> {
        w.iter().map(|g| self.index(g)).collect()
    }

    /// Number of pairs `i < j` with `w[i] > w[j]`.
    pub fn inversions(&self, w: &[String]) -> Result<usize> {
        let wi = self.indices(w)?;
        Ok((0..wi.len())
            .flat_map(|i| (i + 1..wi.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| wi[i] > wi[j])
            .count())
    }

    /// Rewrites until no wrong-order adjacent pair remains. Pairs without a
    /// rule are left in place (the system then has no complete normal form
    /// for them; [`RewriteSystem::is_complete`] reports this).
    pub fn normal_form_with(&self, f: &NCPoly, strategy: Strategy) -> Result<NCPoly> {
        let mut pending: BTreeMap<Vec<usize>, Scalar> = BTreeMap::new();
        for (w, c) in f.terms() {
            let wi = self.indices(w)?;
            add(&mut pending, wi, c.clone());
        }
        let mut done: BTreeMap<Vec<usize>, Scalar> = BTreeMap::new();
        // Process longest, most inverted words first so that cancellations
        // happen before rewriting.
        while let Some(w) = pending.keys().max_by_key(|w| (w.len(), inv(w))).cloned() {
            let c = pending.remove(&w).unwrap();
            let positions = (0..w.len().saturating_sub(1))
                .filter(|&i| w[i] > w[i + 1] && self.rules.contains_key(&(w[i], w[i + 1])));
            let pos = match strategy {
                Strategy::Leftmost => positions.min(),
                Strategy::Rightmost => positions.max(),
            };
            match pos {
                None => add(&mut done, w, c),
                Some(i) => {
                    for (rw, rc) in &self.rules[&(w[i], w[i + 1])] {
                        let mut nw = w[..i].to_vec();
                        nw.extend_from_slice(rw);
                        nw.extend_from_slice(&w[i + 2..]);
                        add(&mut pending, nw, &c * rc);
                    }
                }
            }
        }
        let mut out = NCPoly::zero();
        for (w, c) in done {
            out.add_term(w.iter().map(|&k| self.alphabet[k].clone()).collect(), c);
        }
        Ok(out)
    }

    pub fn normal_form(&self, f: &NCPoly) -> Result<NCPoly> {
        self.normal_form_with(f, Strategy::Leftmost)
    }

    /// Whether every wrong-order pair has a rule.
    pub fn is_complete(&self) -> bool {
        let n = self.alphabet.len();
        (0..n).all(|g| (0..g).all(|h| self.rules.contains_key(&(g, h))))
    }

    /// `normal_form(AB − BA)`.
    pub fn commutator(&self, a: &NCPoly, b: &NCPoly) -> Result<NCPoly> {
        self.normal_form(&(&(a * b) - &(b * a)))
    }

    /// Normal form of `[g1,[g2,g3]] + [g2,[g3,g1]] + [g3,[g1,g2]]` where each
    /// inner commutator is first replaced by its normal form, i.e. the value
    /// the rules assign to it.
    pub fn jacobi_check(&self, g1: &str, g2: &str, g3: &str) -> Result<NCPoly> {
        let (a, b, c) = (NCPoly::gen(g1), NCPoly::gen(g2), NCPoly::gen(g3));
        let mut sum = NCPoly::zero();
        for (x, y, z) in [(&a, &b, &c), (&b, &c, &a), (&c, &a, &b)] {
            let inner = self.commutator(y, z)?;
            sum = &sum + &self.commutator(x, &inner)?;
        }
        self.normal_form(&sum)
    }

    /// True iff `normal_form(lhs − rhs) = 0`.
    pub fn verify_relation(&self, lhs: &NCPoly, rhs: &NCPoly) -> Result<bool> {
        Ok(self.normal_form(&(lhs - rhs))?.is_zero())
    }

    /// Hermitian conjugate: reversed words, conjugated coefficients,
    /// daggered generators.
    pub fn dagger(&self, f: &NCPoly) -> Result<NCPoly> {
        let mut out = NCPoly::zero();
        for (w, c) in f.terms() {
            let wi = self.indices(w)?;
            let nw = wi.iter().rev().map(|&k| self.alphabet[self.dagger[k]].clone()).collect();
            out.add_term(nw, c.conj());
        }
        Ok(out)
    }

    /// The system for rescaled generators `g' = c g`: a rule
    /// `g h → Σ a_w w` becomes `g' h' → Σ a_w c^{2−|w|} w'`.
    pub fn rescaled(&self, c: &Scalar) -> Result<RewriteSystem> {
        let mut out = self.clone();
        for rhs in out.rules.values_mut() {
            for (w, a) in rhs.iter_mut() {
                *a = &*a * &c.powi(2 - w.len() as i32)?;
            }
        }
        out.name = format!("{}-rescaled", self.name);
        Ok(out)
    }

    /// Random polynomial over the alphabet, for corpus checks.
    pub fn random_poly<R: Rng>(&self, rng: &mut R, max_terms: usize, max_len: usize) -> NCPoly {
        let mut p = NCPoly::zero();
        for _ in 0..rng.gen_range(1..=max_terms) {
            let len = rng.gen_range(0..=max_len);
            let w = (0..len)
                .map(|_| self.alphabet[rng.gen_range(0..self.alphabet.len())].clone())
                .collect();
            let c = Scalar::new(
                rat(rng.gen_range(-9..=9), rng.gen_range(1..=5)),
                rat(rng.gen_range(-9..=9), rng.gen_range(1..=5)),
            );
            p.add_term(w, c);
        }
        p
    }

    /// Reduces each input with both strategies; returns the number of
    /// inputs whose normal forms disagree.
    pub fn confluence_failures(&self, inputs: &[NCPoly]) -> Result<usize> {
        let mut bad = 0;
        for f in inputs {
            let l = self.normal_form_with(f, Strategy::Leftmost)?;
            let r = self.normal_form_with(f, Strategy::Rightmost)?;
            if l != r {
                bad += 1;
            }
        }
        Ok(bad)
    }

    pub fn to_json(&self) -> RuleSystemJson {
        RuleSystemJson {
            name: self.name.clone(),
            alphabet: self.alphabet.clone(),
            dagger: (0..self.alphabet.len())
                .filter(|&i| self.dagger[i] > i)
                .map(|i| (self.alphabet[i].clone(), self.alphabet[self.dagger[i]].clone()))
                .collect(),
            rules: self
                .rules
                .iter()
                .map(|(&(g, h), rhs)| RuleJson {
                    lhs: (self.alphabet[g].clone(), self.alphabet[h].clone()),
                    rhs: rhs
                        .iter()
                        .map(|(w, c)| NCTermJson {
                            re: format_rational(&c.re),
                            im: format_rational(&c.im),
                            word: w.iter().map(|&k| self.alphabet[k].clone()).collect(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(j: &RuleSystemJson) -> Result<RewriteSystem> {
        let alphabet: Vec<&str> = j.alphabet.iter().map(String::as_str).collect();
        let dagger: Vec<(&str, &str)> = j.dagger.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let mut rules = Vec::new();
        for r in &j.rules {
            let mut rhs = NCPoly::zero();
            for t in &r.rhs {
                let c = Scalar::new(parse_rational(&t.re)?, parse_rational(&t.im)?);
                rhs.add_term(t.word.clone(), c);
            }
            rules.push((r.lhs.0.as_str(), r.lhs.1.as_str(), rhs));
        }
        let mut seen = BTreeSet::new();
        for (a, b) in &dagger {
            if !seen.insert(*a) || (a != b && !seen.insert(*b)) {
                return Err(Error::Construction("dagger pairs overlap".into()));
            }
        }
        RewriteSystem::new(&j.name, &alphabet, &dagger, rules)
    }

    /// Parses and validates a JSON rule system (untrusted input).
    pub fn from_json_str(text: &str) -> Result<RewriteSystem> {
        let j: RuleSystemJson =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        RewriteSystem::from_json(&j)
    }
}

fn inv(w: &[usize]) -> usize {
    (0..w.len())
        .flat_map(|i| (i + 1..w.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| w[i] > w[j])
        .count()
}

fn add(map: &mut BTreeMap<Vec<usize>, Scalar>, w: Vec<usize>, c: Scalar) {
    if c.is_zero() {
        return;
    }
    let e = map.entry(w.clone()).or_insert_with(Scalar::zero);
    *e += &c;
    if e.is_zero() {
        map.remove(&w);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NCTermJson {
    pub re: String,
    pub im: String,
    pub word: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleJson {
    pub lhs: (String, String),
    pub rhs: Vec<NCTermJson>,
}

/// Serialized rule system: `alphabet` lists generators in increasing order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSystemJson {
    pub name: String,
    pub alphabet: Vec<String>,
    #[serde(default)]
    pub dagger: Vec<(String, String)>,
    pub rules: Vec<RuleJson>,
}

/// Exact values of `ħ` and `β` used to instantiate the shipped systems.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Params {
    pub hbar: Rational,
    pub beta: Rational,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            hbar: rat(1, 10),
            beta: rat(1, 1),
        }
    }
}

impl Params {
    pub fn new(hbar: Rational, beta: Rational) -> Result<Self> {
        if hbar.is_zero() || beta.is_zero() {
            return Err(Error::Parameter("hbar and beta must be nonzero".into()));
        }
        Ok(Params { hbar, beta })
    }

    fn hbar(&self) -> Scalar {
        Scalar::real(self.hbar.clone())
    }

    /// `1 − ħ/β`
    pub fn q_real(&self) -> Scalar {
        Scalar::real(Rational::from_integer(1.into()) - &self.hbar / &self.beta)
    }

    /// `(1 − iħ/2β)/(1 + iħ/2β)`
    pub fn q_phase(&self) -> Scalar {
        let a = Scalar::new(Rational::zero(), &self.hbar / (&self.beta * rat(2, 1)));
        let one = Scalar::from_int(1);
        (&one - &a) / (&one + &a)
    }
}

fn mono(c: Scalar, word: &str) -> NCPoly {
    NCPoly::term(c, word.split_whitespace().map(str::to_string).collect())
}

/// Names of the shipped systems.
pub const SYSTEMS: [&str; 5] = ["eq1", "eq5", "eq5-wrong", "canonical", "qparticle"];

/// Deformed oscillator `b b+ − q² b+ b = ħ` with a given `q²`.
pub fn oscillator_system(hbar: &Rational, q2: &Rational) -> Result<RewriteSystem> {
    let rhs = &mono(Scalar::real(q2.clone()), "b+ b") + &NCPoly::constant(Scalar::real(hbar.clone()));
    RewriteSystem::new("eq1", &["b+", "b"], &[("b", "b+")], vec![("b", "b+", rhs)])
}

/// Lattice algebra on `x < p+ < p`. The first two rules come from the
/// postulate `[x,p] = iħ(1 − ixp/β)` and its adjoint; the third is
/// `p p+ → p+ p/q` from `[p+,p] = −ħ p p+/β` (or, for `wrong`, from
/// `[p+,p] = −ħ p+ p/β`).
fn lattice_system(params: &Params, wrong: bool) -> Result<RewriteSystem> {
    let q = params.q_real();
    let ih = &Scalar::i() * &params.hbar();
    let one = Scalar::from_int(1);
    // p x = q x p − iħ
    let px = &mono(q.clone(), "x p") - &NCPoly::constant(ih.clone());
    // p+ x = (x p+ − iħ)/q
    let qinv = q.recip()?;
    let pdx = (&mono(one.clone(), "x p+") - &NCPoly::constant(ih)).scale(&qinv);
    let ppd = if wrong {
        mono(&one + &Scalar::real(&params.hbar / &params.beta), "p+ p")
    } else {
        mono(qinv, "p+ p")
    };
    RewriteSystem::new(
        if wrong { "eq5-wrong" } else { "eq5" },
        &["x", "p+", "p"],
        &[("p", "p+")],
        vec![("p", "x", px), ("p+", "x", pdx), ("p", "p+", ppd)],
    )
}

/// Builds one of [`SYSTEMS`].
pub fn system(name: &str, params: &Params) -> Result<RewriteSystem> {
    let ih = &Scalar::i() * &params.hbar();
    match name {
        "eq1" => oscillator_system(&params.hbar, &params.q_real().re),
        "eq5" => lattice_system(params, false),
        "eq5-wrong" => lattice_system(params, true),
        "canonical" => RewriteSystem::new(
            "canonical",
            &["x", "p"],
            &[],
            vec![("p", "x", &NCPoly::word("x p") - &NCPoly::constant(ih))],
        ),
        "qparticle" => {
            // [x,p] = iħ(1 + (xp + px)/2β) solved for p x.
            let one = Scalar::from_int(1);
            let a = Scalar::new(Rational::zero(), &params.hbar / (&params.beta * rat(2, 1)));
            let c = -(ih / (&one + &a));
            RewriteSystem::new(
                "qparticle",
                &["x", "p"],
                &[],
                vec![("p", "x", &mono(params.q_phase(), "x p") + &NCPoly::constant(c))],
            )
        }
        _ => Err(Error::Parameter(format!(
            "unknown rule system `{name}` (expected one of {})",
            SYSTEMS.join(", ")
        ))),
    }
}
