//! Residual checks and the versioned verification report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// One named residual. `pass` holds iff `residual ≤ tolerance`; a NaN
/// residual fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub paper_anchor: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, anchor: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            paper_anchor: anchor.into(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }

    /// A yes/no outcome as residual 0 (holds) or 1 (fails) against tolerance 0.
    pub fn boolean(name: impl Into<String>, anchor: impl Into<String>, holds: bool) -> Self {
        Self::new(name, anchor, if holds { 0.0 } else { 1.0 }, 0.0)
    }

    pub fn with_tolerance(&mut self, tolerance: f64) {
        self.tolerance = tolerance;
        self.pass = self.residual <= tolerance;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: String,
    pub checks: Vec<Check>,
    /// Task-specific tables (geodesic rows, spectra, classification).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub tasks: usize,
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub os: String,
    pub arch: String,
    pub tol_scale: f64,
    pub threads: usize,
}

impl Environment {
    pub fn current(tol_scale: f64, threads: usize) -> Self {
        Self {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            tol_scale,
            threads,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub seed: u64,
    pub tasks: Vec<TaskReport>,
    pub summary: Summary,
    pub environment: Environment,
}

impl VerificationReport {
    pub fn new(seed: u64, tasks: Vec<TaskReport>, environment: Environment) -> Self {
        let mut r = Self { schema_version: SCHEMA_VERSION, seed, tasks, summary: Summary::default(), environment };
        r.recount();
        r
    }

    /// Replaces tolerances by `overrides[name]` where present, then scales
    /// every tolerance by `scale`.
    pub fn apply_tolerances(&mut self, overrides: &BTreeMap<String, f64>, scale: f64) {
        for c in self.tasks.iter_mut().flat_map(|t| t.checks.iter_mut()) {
            let base = overrides.get(&c.name).copied().unwrap_or(c.tolerance);
            c.with_tolerance(base * scale);
        }
        self.recount();
    }

    pub fn recount(&mut self) {
        let checks = self.tasks.iter().map(|t| t.checks.len()).sum();
        let passed = self.tasks.iter().flat_map(|t| &t.checks).filter(|c| c.pass).count();
        self.summary = Summary { tasks: self.tasks.len(), checks, passed, failed: checks - passed };
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn checks(&self) -> impl Iterator<Item = (&str, &Check)> {
        self.tasks.iter().flat_map(|t| t.checks.iter().map(move |c| (t.task.as_str(), c)))
    }
}
