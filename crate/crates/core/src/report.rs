//! Shared pieces of the machine-readable report format.

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }

    pub fn and(self, other: Verdict) -> Verdict {
        Verdict::from_bool(self.passed() && other.passed())
    }
}

/// One named residual compared against a tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

impl Check {
    /// Passes iff `residual <= tolerance`; a NaN residual fails.
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            residual,
            tolerance,
            verdict: Verdict::from_bool(residual <= tolerance),
            witness: None,
        }
    }

    /// A check whose verdict is decided by the caller rather than a plain threshold.
    pub fn with_verdict(name: impl Into<String>, residual: f64, tolerance: f64, ok: bool) -> Self {
        Check {
            name: name.into(),
            residual,
            tolerance,
            verdict: Verdict::from_bool(ok),
            witness: None,
        }
    }

    pub fn with_witness(mut self, witness: impl Serialize) -> Self {
        self.witness = serde_json::to_value(witness).ok();
        self
    }

    pub fn prefixed(mut self, prefix: &str) -> Self {
        self.name = format!("{prefix}.{}", self.name);
        self
    }
}

pub fn all_pass<'a>(checks: impl IntoIterator<Item = &'a Check>) -> Verdict {
    Verdict::from_bool(checks.into_iter().all(|c| c.verdict.passed()))
}
