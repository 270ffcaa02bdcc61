//! Shared check-report records: every verification operation returns a list
//! of named residuals with thresholds, suitable for both human and
//! machine-readable output.

use serde::{Deserialize, Serialize};

/// One named residual check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// Where the check was evaluated (overlap, chart, seed, …).
    pub location: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, location: impl Into<String>, residual: f64, threshold: f64) -> Self {
        CheckRecord {
            name: name.into(),
            location: location.into(),
            residual,
            threshold,
            pass: residual <= threshold,
        }
    }
}

/// A bundle of checks; passes iff every record passes.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CheckReport {
    pub records: Vec<CheckRecord>,
}

impl CheckReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.records.push(record);
    }

    pub fn add(&mut self, name: impl Into<String>, location: impl Into<String>, residual: f64, threshold: f64) {
        self.push(CheckRecord::new(name, location, residual, threshold));
    }

    pub fn pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.records.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.records.extend(other.records);
    }
}
