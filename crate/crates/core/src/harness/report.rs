//! JSON reports: one object per command with its parameters, results and checks.

use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

/// One pass/fail assertion with the tolerance it used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub detail: String,
}

impl Check {
    pub fn new(id: impl Into<String>, passed: bool) -> Self {
        Self {
            id: id.into(),
            passed,
            value: None,
            tolerance: None,
            detail: String::new(),
        }
    }

    pub fn with_value(mut self, value: f64) -> Self {
        self.value = Some(value);
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = Some(tolerance);
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub params: Value,
    pub results: Vec<Value>,
    pub checks: Vec<Check>,
    pub versions: BTreeMap<String, String>,
    /// Seconds since the Unix epoch; excluded from reproducibility comparisons.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timestamp: Option<u64>,
}

impl Report {
    pub fn new(command: impl Into<String>, params: impl Serialize) -> Result<Self> {
        let mut versions = BTreeMap::new();
        versions.insert(
            env!("CARGO_PKG_NAME").to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        );
        Ok(Self {
            command: command.into(),
            params: serde_json::to_value(params)?,
            results: Vec::new(),
            checks: Vec::new(),
            versions,
            timestamp: None,
        })
    }

    pub fn push_result(&mut self, result: impl Serialize) -> Result<()> {
        self.results.push(serde_json::to_value(result)?);
        Ok(())
    }

    pub fn push_check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn stamp(&mut self) {
        self.timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with the timestamp removed, for byte-level comparisons.
    pub fn to_comparable_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.timestamp = None;
        copy.to_json()
    }
}
