//! Certificate reports and tabular output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::measures::{Method, RateEstimate};

/// Outcome of one numerically checked hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    /// How residual is compared with threshold: "<=", "<" or ">".
    pub relation: String,
    pub passed: bool,
    pub sample_count: usize,
    pub seed: Option<u64>,
}

impl HypothesisCheck {
    /// Passes iff residual ≤ threshold.
    pub fn at_most(name: impl Into<String>, residual: f64, threshold: f64, sample_count: usize) -> Self {
        Self::build(name, residual, threshold, "<=", residual <= threshold, sample_count)
    }

    /// Passes iff residual < threshold.
    pub fn below(name: impl Into<String>, residual: f64, threshold: f64, sample_count: usize) -> Self {
        Self::build(name, residual, threshold, "<", residual < threshold, sample_count)
    }

    /// Passes iff residual > threshold.
    pub fn above(name: impl Into<String>, residual: f64, threshold: f64, sample_count: usize) -> Self {
        Self::build(name, residual, threshold, ">", residual > threshold, sample_count)
    }

    fn build(name: impl Into<String>, residual: f64, threshold: f64, relation: &str, passed: bool, sample_count: usize) -> Self {
        Self { name: name.into(), residual, threshold, relation: relation.into(), passed, sample_count, seed: None }
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    Certified,
    Withheld,
    /// The rate is reported but a structural hypothesis failed.
    RateOnly,
}

/// Simulation cross-check of a certified decay quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheck {
    pub quantity: String,
    /// Fitted exponent per initial condition.
    pub exponents: Vec<f64>,
    /// λ + 0.1·|λ|.
    pub bound: f64,
    pub passed: bool,
}

impl CrossCheck {
    pub fn new(quantity: impl Into<String>, exponents: Vec<f64>, lambda: f64) -> Self {
        let bound = lambda + 0.1 * lambda.abs();
        let passed = !exponents.is_empty() && exponents.iter().all(|e| *e <= bound);
        Self { quantity: quantity.into(), exponents, bound, passed }
    }
}

/// A named quantity with its method tag, reported alongside hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub name: String,
    pub value: f64,
    pub method: Method,
}

impl Diagnostic {
    pub fn new(name: impl Into<String>, value: f64, method: Method) -> Self {
        Self { name: name.into(), value, method }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub rate: RateEstimate,
    pub status: CertificateStatus,
    pub hypotheses: Vec<HypothesisCheck>,
    /// Transient length t_b for asymptotic certificates.
    pub transient_bound: Option<f64>,
    /// The conclusion asserted when certified.
    pub conclusion: Option<String>,
    pub failing: Vec<String>,
    pub cross_check: Option<CrossCheck>,
    pub diagnostics: Vec<Diagnostic>,
    pub seed: Option<u64>,
}

impl ContractionReport {
    /// Certified iff every hypothesis passes; `structural` names hypotheses
    /// whose failure downgrades to rate-only rather than withholding.
    pub fn from_checks(rate: RateEstimate, hypotheses: Vec<HypothesisCheck>, structural: &[&str], conclusion: impl Into<String>) -> Self {
        let failing: Vec<String> = hypotheses.iter().filter(|h| !h.passed).map(|h| h.name.clone()).collect();
        let status = if failing.is_empty() {
            CertificateStatus::Certified
        } else if failing.iter().all(|f| structural.contains(&f.as_str())) {
            CertificateStatus::RateOnly
        } else {
            CertificateStatus::Withheld
        };
        let conclusion = (status == CertificateStatus::Certified).then(|| conclusion.into());
        Self { rate, status, hypotheses, transient_bound: None, conclusion, failing, cross_check: None, diagnostics: Vec::new(), seed: None }
    }

    pub fn is_certified(&self) -> bool {
        self.status == CertificateStatus::Certified
    }

    pub fn hypothesis(&self, name: &str) -> Option<&HypothesisCheck> {
        self.hypotheses.iter().find(|h| h.name == name)
    }
}

/// A numeric table with a header row.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Writes CSV; floats use the shortest representation that round-trips.
    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.header)?;
        for row in &self.rows {
            wr.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_path(&self, path: &Path) -> Result<()> {
        self.write(std::fs::File::create(path)?)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}
