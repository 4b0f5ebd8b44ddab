//! Serializable records of verification campaigns.
//!
//! A [`ScenarioReport`] is the common output of the axiom harnesses, the
//! discrimination sweeps, and the CLI campaigns: one record per case with
//! the compared values and residual, plus a summary. Violations are data,
//! not errors — a failing case sets `pass = false`.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case_id: String,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Digest of the case inputs; reproducible from (version, seed, inputs).
    pub inputs_digest: String,
    /// Reference value (closed form / theorem side).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_closed_form: Option<f64>,
    /// Independently computed value (direct definition / constructed side).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_direct: Option<f64>,
    /// Additional named values carried by the case.
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub values: BTreeMap<String, f64>,
    pub residual: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CaseRecord {
    pub fn new(case_id: impl Into<String>, dim: usize) -> Self {
        Self {
            case_id: case_id.into(),
            dim,
            alpha: None,
            inputs_digest: String::new(),
            value_closed_form: None,
            value_direct: None,
            values: BTreeMap::new(),
            residual: 0.0,
            pass: true,
            detail: None,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn with_digest(mut self, digest: String) -> Self {
        self.inputs_digest = digest;
        self
    }

    pub fn with_values(mut self, closed_form: f64, direct: f64) -> Self {
        self.value_closed_form = Some(closed_form);
        self.value_direct = Some(direct);
        self
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }

    /// Set the residual and decide pass/fail against a tolerance.
    pub fn check(mut self, residual: f64, tolerance: f64) -> Self {
        self.residual = residual;
        self.pass = residual <= tolerance;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub max_residual: f64,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub toolkit_version: String,
    pub seed: u64,
    pub cases: Vec<CaseRecord>,
    pub summary: Summary,
}

impl ScenarioReport {
    pub fn new(scenario: impl Into<String>, seed: u64, cases: Vec<CaseRecord>) -> Self {
        let passed = cases.iter().filter(|c| c.pass).count();
        let max_residual = cases.iter().map(|c| c.residual).fold(0.0, f64::max);
        let summary = Summary {
            total: cases.len(),
            passed,
            failed: cases.len() - passed,
            max_residual,
            wall_time_ms: 0.0,
        };
        Self {
            scenario: scenario.into(),
            toolkit_version: crate::VERSION.to_string(),
            seed,
            cases,
            summary,
        }
    }

    pub fn with_wall_time(mut self, ms: f64) -> Self {
        self.summary.wall_time_ms = ms;
        self
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseRecord> {
        self.cases.iter().filter(|c| !c.pass)
    }
}

/// FNV-1a digest, hex-encoded; stable across platforms and runs.
pub fn digest_bytes(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

/// Digest of a stream of f64 values (bit patterns, order-sensitive).
pub fn digest_f64s(values: impl IntoIterator<Item = f64>) -> String {
    let mut bytes = Vec::new();
    for v in values {
        bytes.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    digest_bytes(&bytes)
}
