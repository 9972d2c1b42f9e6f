//! Verification records and CSV formatting shared by the library and the CLI.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

/// One numerical check: a residual compared against a tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub check_name: String,
    pub parameters: BTreeMap<String, Value>,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `residual <= tolerance` (NaN never passes).
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            check_name: name.into(),
            parameters: BTreeMap::new(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }

    /// A check that must fail by at least the tolerance (negative controls).
    pub fn expect_above(name: impl Into<String>, residual: f64, threshold: f64) -> Self {
        let mut c = Self::new(name, residual, threshold);
        c.pass = residual >= threshold;
        c
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }
}

/// A batch of checks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.check_name == name)
    }
}

/// Formats a float with 17 significant digits, independent of locale.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Relative deviation `|a − b| / max(|b|, floor)`.
pub fn rel_dev(a: num_complex::Complex64, b: num_complex::Complex64, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}
