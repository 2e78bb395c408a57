use serde::{Deserialize, Serialize};

/// Outcome of one verification check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Short name of the identity being checked.
    pub tag: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

impl Check {
    /// Passes when `measured ≤ tolerance` (NaN fails).
    pub fn at_most(name: impl Into<String>, tag: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            tag: tag.into(),
            measured,
            tolerance,
            passed: measured <= tolerance,
            detail: None,
        }
    }

    /// Fails the check unless `ok`; for checks with secondary criteria.
    pub fn and_also(mut self, ok: bool) -> Self {
        self.passed &= ok;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    /// A check that could not be evaluated.
    pub fn errored(name: impl Into<String>, tag: impl Into<String>, tolerance: f64, err: impl std::fmt::Display) -> Self {
        Check {
            name: name.into(),
            tag: tag.into(),
            measured: f64::NAN,
            tolerance,
            passed: false,
            detail: Some(format!("error: {err}")),
        }
    }
}

/// Ordered list of checks from one suite run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn new(suite: &str, seed: u64, checks: Vec<Check>) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            seed,
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Relative deviation `|a − b| / |b|`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
