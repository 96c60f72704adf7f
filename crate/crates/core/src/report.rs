//! Machine-readable run reports.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::sofic::Estimate;

pub const REPORT_VERSION: u32 = 1;

/// How a numeric value was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ValueMode {
    Exact,
    Sampled { seed: u64, samples: u64, radius: f64, confidence: f64 },
}

impl ValueMode {
    pub fn of(e: &Estimate) -> Self {
        if e.exact {
            ValueMode::Exact
        } else {
            ValueMode::Sampled { seed: e.seed.unwrap_or(0), samples: e.total as u64, radius: e.radius, confidence: e.confidence }
        }
    }
}

/// One named check: `value <comparison> bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Stable name of the property being checked.
    pub anchor: String,
    pub value: f64,
    pub comparison: String,
    pub bound: f64,
    pub pass: bool,
    #[serde(flatten)]
    pub mode: ValueMode,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub detail: String,
}

impl CheckResult {
    pub fn custom(name: &str, anchor: &str, value: f64, comparison: &str, bound: f64, pass: bool) -> Self {
        CheckResult {
            name: name.to_string(),
            anchor: anchor.to_string(),
            value,
            comparison: comparison.to_string(),
            bound,
            pass,
            mode: ValueMode::Exact,
            detail: String::new(),
        }
    }

    pub fn at_most(name: &str, anchor: &str, value: f64, bound: f64) -> Self {
        CheckResult::custom(name, anchor, value, "<=", bound, value <= bound)
    }

    pub fn at_least(name: &str, anchor: &str, value: f64, bound: f64) -> Self {
        CheckResult::custom(name, anchor, value, ">=", bound, value >= bound)
    }

    pub fn greater(name: &str, anchor: &str, value: f64, bound: f64) -> Self {
        CheckResult::custom(name, anchor, value, ">", bound, value > bound)
    }

    pub fn equals(name: &str, anchor: &str, value: f64, bound: f64) -> Self {
        CheckResult::custom(name, anchor, value, "==", bound, value == bound)
    }

    pub fn holds(name: &str, anchor: &str, pass: bool) -> Self {
        CheckResult::custom(name, anchor, pass as u8 as f64, "==", 1.0, pass)
    }

    /// A sampled estimate passes when its confidence interval clears the bound.
    pub fn estimate_at_most(name: &str, anchor: &str, e: &Estimate, bound: f64) -> Self {
        CheckResult { mode: ValueMode::of(e), ..CheckResult::custom(name, anchor, e.value, "<=", bound, e.at_most(bound)) }
    }

    pub fn estimate_at_least(name: &str, anchor: &str, e: &Estimate, bound: f64) -> Self {
        CheckResult { mode: ValueMode::of(e), ..CheckResult::custom(name, anchor, e.value, ">=", bound, e.at_least(bound)) }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn with_mode(mut self, mode: ValueMode) -> Self {
        self.mode = mode;
        self
    }

    /// `PASS name` or `FAIL name [anchor]: value cmp bound`.
    pub fn line(&self) -> String {
        if self.pass {
            format!("PASS {}: {} {} {}", self.name, self.value, self.comparison, self.bound)
        } else {
            format!("FAIL {} [{}]: {} {} {}", self.name, self.anchor, self.value, self.comparison, self.bound)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<u32>,
    pub m: u32,
    pub k: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r_p: Option<u32>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<u64>,
    pub mode: String,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub primes: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
}

impl Artifact {
    pub fn of(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Ok(Artifact {
            file: path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

/// Wall time is printed on stderr rather than stored, so identical runs
/// produce identical reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub command: String,
    pub parameters: Parameters,
    pub checks: Vec<CheckResult>,
    pub all_pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub artifacts: Vec<Artifact>,
}

impl RunReport {
    pub fn new(command: &str, parameters: Parameters, checks: Vec<CheckResult>) -> Self {
        let all_pass = checks.iter().all(|c| c.pass);
        RunReport { version: REPORT_VERSION, command: command.to_string(), parameters, checks, all_pass, artifacts: Vec::new() }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trip() {
        let params = Parameters { p: Some(7), m: 5, k: 3, r_p: Some(11), seed: 1, samples: None, mode: "exact".into(), primes: vec![] };
        let e = Estimate { value: 0.5, exact: false, count: 5, total: 10, radius: 0.1, confidence: 0.99, seed: Some(3) };
        let checks = vec![
            CheckResult::at_most("a", "bound a", 1.0, 2.0),
            CheckResult::estimate_at_least("b", "bound b", &e, 0.3).with_detail("sampled"),
        ];
        let r = RunReport::new("verify", params, checks);
        assert!(r.all_pass);
        let back = RunReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        let failing = CheckResult::at_least("c", "named anchor", 0.0, 1.0);
        assert!(failing.line().contains("[named anchor]"));
    }
}
