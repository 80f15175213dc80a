//! Named pass/fail verdicts collected by every subcommand.

use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable bound, e.g. `<= 0.05`.
    pub bound: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, bound: format!("<= {limit:e}"), passed: value <= limit }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, bound: format!(">= {limit:e}"), passed: value >= limit }
    }

    pub fn above(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, bound: format!("> {limit:e}"), passed: value > limit }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), value, bound: format!("in [{lo}, {hi}]"), passed: (lo..=hi).contains(&value) }
    }

    pub fn exactly(name: impl Into<String>, value: f64, target: f64) -> Self {
        Self { name: name.into(), value, bound: format!("== {target:e}"), passed: value == target }
    }

    pub fn flag(name: impl Into<String>, passed: bool) -> Self {
        Self { name: name.into(), value: f64::from(u8::from(passed)), bound: "true".into(), passed }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{verdict}] {}: {:.6e} ({})", self.name, self.value, self.bound)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CheckList(pub Vec<Check>);

impl CheckList {
    pub fn push(&mut self, check: Check) {
        self.0.push(check);
    }

    pub fn extend(&mut self, other: CheckList) {
        self.0.extend(other.0);
    }

    pub fn all_passed(&self) -> bool {
        self.0.iter().all(|c| c.passed)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Check> {
        self.0.iter()
    }
}
