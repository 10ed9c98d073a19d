//! Structured pass/fail records produced by every verification routine.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// How the numbers in a report were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Dense eigen/singular value computations; no sampling involved.
    ExactSpectral,
    /// At least one quantity was estimated from random probes.
    Sampled,
}

/// A residual compared against the tolerance it was checked at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

impl Residual {
    pub fn within(&self) -> bool {
        self.value <= self.tolerance
    }
}

/// A certified or computed constant (frame bound, norm, λ, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub passed: bool,
    pub provenance: Provenance,
    #[serde(default)]
    pub residuals: Vec<Residual>,
    #[serde(default)]
    pub constants: Vec<Constant>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl VerificationReport {
    pub fn builder(check: impl Into<String>, provenance: Provenance) -> ReportBuilder {
        ReportBuilder {
            report: VerificationReport {
                check: check.into(),
                passed: true,
                provenance,
                residuals: Vec::new(),
                constants: Vec::new(),
                failures: Vec::new(),
                labels: BTreeMap::new(),
                notes: Vec::new(),
                wall_time_s: None,
            },
        }
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.name == name).map(|r| r.value)
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|c| c.name == name).map(|c| c.value)
    }

    /// Continues building from an existing report under a new check name.
    pub fn rebuild(mut self, check: impl Into<String>) -> ReportBuilder {
        self.check = check.into();
        ReportBuilder { report: self }
    }

    pub fn label(&self, name: &str) -> Option<&str> {
        self.labels.get(name).map(String::as_str)
    }

    pub fn with_wall_time(mut self, seconds: f64) -> Self {
        self.wall_time_s = Some(seconds);
        self
    }
}

pub struct ReportBuilder {
    report: VerificationReport,
}

impl ReportBuilder {
    pub fn residual(mut self, name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        let name = name.into();
        let value = self.finite(&name, value);
        if value > tolerance {
            self.report
                .failures
                .push(format!("{name} = {value:.3e} exceeds tolerance {tolerance:.3e}"));
        }
        self.report.residuals.push(Residual {
            name,
            value,
            tolerance,
        });
        self
    }

    pub fn constant(mut self, name: impl Into<String>, value: f64) -> Self {
        let name = name.into();
        let value = self.finite(&name, value);
        self.report.constants.push(Constant { name, value });
        self
    }

    /// Records a boolean condition; a false condition fails the report.
    pub fn require(mut self, holds: bool, message: impl Into<String>) -> Self {
        if !holds {
            self.report.failures.push(message.into());
        }
        self
    }

    pub fn fail(self, message: impl Into<String>) -> Self {
        self.require(false, message)
    }

    /// Attaches a non-numeric result such as a classification.
    pub fn label(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.report.labels.insert(name.into(), value.into());
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.report.notes.push(note.into());
        self
    }

    pub fn provenance(mut self, provenance: Provenance) -> Self {
        self.report.provenance = provenance;
        self
    }

    pub fn finish(mut self) -> VerificationReport {
        self.report.passed = self.report.failures.is_empty();
        self.report
    }

    // Non-finite numbers cannot appear in a report; they become a failure and a
    // saturated value.
    fn finite(&mut self, name: &str, value: f64) -> f64 {
        if value.is_finite() {
            value
        } else {
            self.report.failures.push(format!("{name} is not finite"));
            if value < 0.0 {
                f64::MIN
            } else {
                f64::MAX
            }
        }
    }
}
