//! Uniform result record for every inequality check.

use serde::Serialize;

use crate::bodies::{Body, BodySummary};
use crate::config::NumericConfig;

/// One evaluated inequality `lhs <= rhs`.
///
/// `pass` is exactly `margin >= -tolerance`. Whether the statement's
/// hypotheses hold is reported separately in `hypothesis_met`, so that a
/// failed hypothesis never hides the computed margins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifierReport {
    pub theorem: String,
    pub bodies: Vec<BodySummary>,
    pub alpha: Option<f64>,
    pub epsilon: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub margin: f64,
    pub pass: bool,
    pub hypothesis_met: bool,
    pub flags: Vec<String>,
    pub tolerance: f64,
    pub resolution: usize,
    pub lmax: usize,
    pub error: Option<String>,
}

impl VerifierReport {
    pub fn new(theorem: &str, bodies: &[&Body], cfg: &NumericConfig) -> Self {
        let n = bodies.first().map(|b| b.dim()).unwrap_or(2);
        Self {
            theorem: theorem.to_string(),
            bodies: bodies.iter().map(|b| b.summary()).collect(),
            alpha: None,
            epsilon: 0.0,
            lhs: 0.0,
            rhs: 0.0,
            constant: 0.0,
            margin: 0.0,
            pass: false,
            hypothesis_met: false,
            flags: Vec::new(),
            tolerance: 0.0,
            resolution: cfg.resolution_for(n),
            lmax: cfg.lmax,
            error: None,
        }
    }

    /// Fills both sides, the margin, the verdict tolerance and `pass`.
    pub fn conclude(mut self, lhs: f64, rhs: f64, cfg: &NumericConfig) -> Self {
        self.lhs = lhs;
        self.rhs = rhs;
        self.margin = rhs - lhs;
        self.tolerance = cfg.tol.verdict(rhs);
        self.pass = self.margin >= -self.tolerance;
        self
    }

    pub fn flag(mut self, f: impl Into<String>) -> Self {
        self.flags.push(f.into());
        self
    }

    /// Report for a pair whose evaluation failed.
    pub fn failed(theorem: &str, bodies: &[&Body], cfg: &NumericConfig, err: String) -> Self {
        let mut r = Self::new(theorem, bodies, cfg);
        r.lhs = f64::NAN;
        r.rhs = f64::NAN;
        r.margin = f64::NAN;
        r.epsilon = f64::NAN;
        r.error = Some(err);
        r
    }
}

/// Smoothness flag recorded on every report that involves the bodies.
pub fn smoothness_flag(bodies: &[&Body]) -> String {
    if bodies.iter().all(|b| b.is_smooth()) {
        "smooth".to_string()
    } else {
        "non-smooth".to_string()
    }
}
