use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Not applicable to the handles supplied (for instance duality with an external
    /// conservation-law solver).
    Skipped,
}

/// Outcome of one check. A check passes when `measured_margin <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    pub measured_margin: f64,
    pub tolerance: f64,
    pub scenario: String,
}

impl CheckRecord {
    pub fn evaluate(
        name: impl Into<String>,
        margin: f64,
        tolerance: f64,
        scenario: impl Into<String>,
    ) -> Self {
        let status = if margin.is_finite() && margin <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            name: name.into(),
            status,
            measured_margin: margin,
            tolerance,
            scenario: scenario.into(),
        }
    }

    pub fn failed(name: impl Into<String>, tolerance: f64, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Fail,
            measured_margin: f64::INFINITY,
            tolerance,
            scenario: reason.into(),
        }
    }

    pub fn skipped(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Skipped,
            measured_margin: 0.0,
            tolerance: 0.0,
            scenario: reason.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub records: Vec<CheckRecord>,
    /// Limiter identified from the conservation-law handle, falling back to the HJ one.
    pub identified_limiter: Option<f64>,
    pub identified_limiter_hj: Option<f64>,
    pub identified_limiter_cl: Option<f64>,
    /// Trace-flux drift below which a Riemann datum counts as stationary.
    pub stationary_threshold: f64,
}

impl VerificationReport {
    pub fn failures(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.status == Status::Fail)
            .count()
    }

    pub fn all_passed(&self) -> bool {
        self.failures() == 0
    }

    pub fn record(&self, name: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            let tag = match r.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skipped => "SKIP",
            };
            let _ = writeln!(
                s,
                "{tag}  {:<28} margin={:<12.4e} tol={:<10.3e} {}",
                r.name, r.measured_margin, r.tolerance, r.scenario
            );
        }
        let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |a| format!("{a:.6}"));
        let _ = writeln!(
            s,
            "identified limiter: {} (hj {}, cl {}); seed {}; stationary threshold {}",
            fmt(self.identified_limiter),
            fmt(self.identified_limiter_hj),
            fmt(self.identified_limiter_cl),
            self.seed,
            self.stationary_threshold
        );
        let _ = writeln!(
            s,
            "{} checks, {} failed",
            self.records.len(),
            self.failures()
        );
        s
    }
}
