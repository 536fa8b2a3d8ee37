//! Machine-readable check reports shared by every CLI command.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

/// `{command, params, seed, checks, max_error, verdict}` plus optional
/// free-form details. Keys are sorted, so equal runs serialize to
/// identical bytes.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub params: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub checks: Vec<Check>,
    pub max_error: f64,
    pub verdict: String,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Value>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            command: command.into(),
            params: BTreeMap::new(),
            seed: None,
            checks: Vec::new(),
            max_error: 0.0,
            verdict: "pass".into(),
            details: BTreeMap::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.params.insert(key.into(), value.into());
        self
    }

    pub fn detail(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.details.insert(key.into(), value.into());
        self
    }

    /// Records `value ≤ tol`. Non-finite values fail.
    pub fn check(&mut self, name: &str, value: f64, tol: f64) -> &mut Self {
        let pass = value.is_finite() && value <= tol;
        self.push(name, value, tol, pass)
    }

    /// Records a check with an externally decided outcome.
    pub fn push(&mut self, name: &str, value: f64, tol: f64, pass: bool) -> &mut Self {
        if value.is_finite() {
            self.max_error = self.max_error.max(value);
        } else {
            self.max_error = f64::INFINITY;
        }
        if !pass {
            self.verdict = "fail".into();
        }
        self.checks.push(Check {
            name: name.into(),
            value,
            tol,
            pass,
        });
        self
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self).map_err(|e| Error::Format(e.to_string()))?;
        // JSON has no infinity; write non-finite numbers as strings.
        fix_nonfinite(&mut v, self);
        serde_json::to_string_pretty(&v).map_err(|e| Error::Format(e.to_string()))
    }
}

fn fix_nonfinite(v: &mut Value, r: &Report) {
    let text = |x: f64| Value::String(format!("{x}"));
    if let Some(checks) = v.get_mut("checks").and_then(Value::as_array_mut) {
        for (c, orig) in checks.iter_mut().zip(&r.checks) {
            if !orig.value.is_finite() {
                c["value"] = text(orig.value);
            }
        }
    }
    if !r.max_error.is_finite() {
        v["max_error"] = text(r.max_error);
    }
}
