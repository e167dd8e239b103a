//! Structured verdicts emitted by every verification operation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// The premise of an implication was not satisfied by the inputs, so
    /// nothing was checked. Not a failure.
    HypothesisNotMet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    pub status: Status,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_abs_diff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Named scalar statistics (z-scores, eigenvalues, fitted slopes...).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub stats: BTreeMap<String, f64>,
    #[serde(default)]
    pub details: Vec<String>,
}

impl Report {
    pub fn new(check: impl Into<String>) -> Self {
        Report {
            check: check.into(),
            mode: None,
            status: Status::Pass,
            pass: true,
            max_abs_diff: None,
            tolerance: None,
            seed: None,
            stats: BTreeMap::new(),
            details: Vec::new(),
        }
    }

    pub fn with_mode(mut self, mode: impl Into<String>) -> Self {
        self.mode = Some(mode.into());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn set_status(&mut self, status: Status) {
        self.status = status;
        self.pass = status != Status::Fail;
    }

    /// Record a comparison of `max_abs_diff` against `tolerance` and set the
    /// verdict from it.
    pub fn judge(&mut self, max_abs_diff: f64, tolerance: f64) {
        self.max_abs_diff = Some(max_abs_diff);
        self.tolerance = Some(tolerance);
        let ok = max_abs_diff.is_finite() && max_abs_diff <= tolerance;
        self.set_status(if ok { Status::Pass } else { Status::Fail });
    }

    /// Downgrade to failure (never upgrades).
    pub fn fail(&mut self, why: impl Into<String>) {
        self.details.push(why.into());
        self.set_status(Status::Fail);
    }

    pub fn stat(&mut self, name: impl Into<String>, value: f64) {
        self.stats.insert(name.into(), value);
    }

    pub fn detail(&mut self, line: impl Into<String>) {
        self.details.push(line.into());
    }

    /// Fold another report's verdict into this one.
    pub fn absorb(&mut self, other: &Report) {
        if other.status == Status::Fail {
            self.set_status(Status::Fail);
        }
        self.details.push(format!(
            "{}: {}",
            other.check,
            match other.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
                Status::HypothesisNotMet => "hypothesis-not-met",
            }
        ));
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn judge_rejects_nan() {
        let mut r = Report::new("x");
        r.judge(f64::NAN, 1.0);
        assert!(!r.pass);
    }

    #[test]
    fn hypothesis_not_met_is_not_failure() {
        let mut r = Report::new("x");
        r.set_status(Status::HypothesisNotMet);
        assert!(r.pass);
        let json = r.to_json();
        assert!(json.contains("\"hypothesis-not-met\""));
    }
}
