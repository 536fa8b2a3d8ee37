//! JSON interchange for polynomials and Poisson structures.
//!
//! Coefficients are written as lists of `(exponent-vector, re, im)` over a
//! shared `variables` list (chart symbols, then the reserved parameters),
//! with rational parts as `"p/q"` strings.

use serde::{Deserialize, Serialize};

use crate::chart::{ChartKind, CoordinateChart};
use crate::error::{Error, Result};
use crate::poisson::{Beta, PoissonStructure};
use crate::poly::{is_parameter, Monomial, PolyExpr, PARAMETERS};
use crate::scalar::{format_rational, parse_rational, Scalar};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson(pub Vec<i32>, pub String, pub String);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartJson {
    pub names: Vec<String>,
    pub pairing: Vec<usize>,
    pub kind: ChartKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureJson {
    pub name: String,
    pub chart: ChartJson,
    pub variables: Vec<String>,
    pub bivector: Vec<Vec<Vec<TermJson>>>,
    pub casimirs: Vec<Vec<TermJson>>,
    pub beta: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyJson {
    pub variables: Vec<String>,
    pub terms: Vec<TermJson>,
}

fn variables_for(chart_names: &[String]) -> Vec<String> {
    chart_names
        .iter()
        .cloned()
        .chain(PARAMETERS.iter().map(|s| s.to_string()))
        .collect()
}

fn encode_terms(p: &PolyExpr, variables: &[String]) -> Result<Vec<TermJson>> {
    p.terms()
        .map(|(m, c)| {
            let mut exps = vec![0; variables.len()];
            for (s, e) in m {
                let k = variables
                    .iter()
                    .position(|v| v == s)
                    .ok_or_else(|| Error::Symbol(s.clone()))?;
                exps[k] = *e;
            }
            Ok(TermJson(exps, format_rational(&c.re), format_rational(&c.im)))
        })
        .collect()
}

fn decode_terms(terms: &[TermJson], variables: &[String]) -> Result<PolyExpr> {
    let mut out = Vec::with_capacity(terms.len());
    for TermJson(exps, re, im) in terms {
        if exps.len() != variables.len() {
            return Err(Error::Format(format!(
                "exponent vector has {} entries, expected {}",
                exps.len(),
                variables.len()
            )));
        }
        let mut m = Monomial::new();
        for (v, &e) in variables.iter().zip(exps) {
            if e < 0 && !is_parameter(v) {
                return Err(Error::Format(format!("negative exponent on `{v}`")));
            }
            if e.unsigned_abs() > 64 {
                return Err(Error::Format(format!("exponent {e} out of range")));
            }
            if e != 0 {
                m.insert(v.clone(), e);
            }
        }
        out.push((m, Scalar::new(parse_rational(re)?, parse_rational(im)?)));
    }
    Ok(PolyExpr::from_terms(out))
}

pub fn poly_to_json(p: &PolyExpr) -> Result<PolyJson> {
    let mut variables: Vec<String> = p.free_symbols().into_iter().collect();
    variables.extend(PARAMETERS.iter().map(|s| s.to_string()));
    Ok(PolyJson {
        terms: encode_terms(p, &variables)?,
        variables,
    })
}

pub fn poly_from_json(j: &PolyJson) -> Result<PolyExpr> {
    check_unique(&j.variables)?;
    decode_terms(&j.terms, &j.variables)
}

pub fn structure_to_json(s: &PoissonStructure) -> Result<StructureJson> {
    let chart = s.chart();
    let variables = variables_for(chart.names());
    let bivector = s
        .bivector()
        .iter()
        .map(|row| row.iter().map(|e| encode_terms(e, &variables)).collect())
        .collect::<Result<_>>()?;
    let casimirs = s
        .casimirs()
        .iter()
        .map(|c| encode_terms(c, &variables))
        .collect::<Result<_>>()?;
    Ok(StructureJson {
        name: s.name.clone(),
        chart: ChartJson {
            names: chart.names().to_vec(),
            pairing: chart.conjugation().to_vec(),
            kind: chart.kind(),
        },
        variables,
        bivector,
        casimirs,
        beta: match s.beta() {
            Beta::Symbolic => "symbolic".into(),
            Beta::Value(r) => format_rational(r),
        },
    })
}

pub fn structure_from_json(j: &StructureJson) -> Result<PoissonStructure> {
    check_unique(&j.variables)?;
    let chart = CoordinateChart::new(j.chart.names.clone(), j.chart.pairing.clone(), j.chart.kind)?;
    let beta = if j.beta == "symbolic" {
        Beta::Symbolic
    } else {
        Beta::value(parse_rational(&j.beta)?)?
    };
    let bivector = j
        .bivector
        .iter()
        .map(|row| row.iter().map(|t| decode_terms(t, &j.variables)).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    let casimirs = j
        .casimirs
        .iter()
        .map(|t| decode_terms(t, &j.variables))
        .collect::<Result<Vec<_>>>()?;
    PoissonStructure::new(j.name.clone(), chart, bivector, casimirs, beta)
}

pub fn structure_to_string(s: &PoissonStructure) -> Result<String> {
    serde_json::to_string_pretty(&structure_to_json(s)?).map_err(|e| Error::Format(e.to_string()))
}

/// Parses a structure document. Accepts untrusted input.
pub fn structure_from_str(text: &str) -> Result<PoissonStructure> {
    let j: StructureJson = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    structure_from_json(&j)
}

fn check_unique(vars: &[String]) -> Result<()> {
    for (i, v) in vars.iter().enumerate() {
        if vars[..i].contains(v) {
            return Err(Error::Format(format!("duplicate variable `{v}`")));
        }
    }
    Ok(())
}
