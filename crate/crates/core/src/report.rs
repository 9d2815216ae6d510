//! Machine-readable verdicts and reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Outcome of one inequality or identity check. `residual` is the violation
/// amount (nonpositive when the claim holds exactly) and
/// `pass == (residual <= tolerance)` unless an auxiliary condition recorded
/// in `meta` also failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub claim: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub meta: BTreeMap<String, Value>,
}

impl Verdict {
    /// Claim `lhs ≤ rhs + tolerance`.
    pub fn at_most(claim: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let residual = lhs - rhs;
        Self {
            claim: claim.to_string(),
            lhs,
            rhs,
            residual,
            tolerance,
            pass: residual <= tolerance,
            meta: BTreeMap::new(),
        }
    }

    /// Claim `|lhs − rhs| ≤ tolerance`.
    pub fn equal(claim: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let residual = (lhs - rhs).abs();
        Self {
            claim: claim.to_string(),
            lhs,
            rhs,
            residual,
            tolerance,
            pass: residual <= tolerance,
            meta: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    /// Records an auxiliary condition; a failing one fails the verdict.
    pub fn require(mut self, key: &str, ok: bool) -> Self {
        self.meta.insert(key.to_string(), Value::Bool(ok));
        self.pass &= ok;
        self
    }
}

/// One named hypothesis or stage inside a [`Report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// `None` for indicative-only estimates that carry no verdict.
    pub pass: Option<bool>,
    pub worst_residual: f64,
    pub tolerance: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(name: &str, worst_residual: f64, tolerance: f64, samples: usize) -> Self {
        Self {
            name: name.to_string(),
            pass: Some(worst_residual <= tolerance),
            worst_residual,
            tolerance,
            samples,
            note: None,
        }
    }

    pub fn indicative(name: &str, estimate: f64, samples: usize, note: &str) -> Self {
        Self {
            name: name.to_string(),
            pass: None,
            worst_residual: estimate,
            tolerance: f64::NAN,
            samples,
            note: Some(note.to_string()),
        }
    }

    pub fn noted(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Collection of checks plus named scalar values, series and flags.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub checks: Vec<Check>,
    pub values: BTreeMap<String, f64>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub flags: Vec<String>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.values.insert(name.to_string(), value);
    }

    pub fn flag(&mut self, flag: &str) {
        if !self.has_flag(flag) {
            self.flags.push(flag.to_string());
        }
    }

    /// True when every check that carries a verdict passed.
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass != Some(false))
    }
}
