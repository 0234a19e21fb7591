use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// A named estimate with the sizes of the samples it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
    pub n_samples: Vec<u64>,
}

/// A pass/fail comparison of a metric against a threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub name: String,
    pub config: Value,
    pub metrics: Vec<Metric>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub data: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Left unset unless requested, so that reruns are byte-identical.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl ExperimentReport {
    pub fn new<C: Serialize>(name: &str, config: &C) -> Result<Self> {
        Ok(ExperimentReport {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            config: serde_json::to_value(config)?,
            metrics: Vec::new(),
            checks: Vec::new(),
            data: BTreeMap::new(),
            notes: Vec::new(),
            wall_time_s: None,
        })
    }

    pub fn metric(&mut self, name: &str, t: Option<f64>, value: f64, se: Option<f64>, n: &[u64]) {
        self.metrics.push(Metric {
            name: name.to_string(),
            t,
            value,
            se,
            n_samples: n.to_vec(),
        });
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn put<V: Serialize>(&mut self, key: &str, value: &V) -> Result<()> {
        self.data.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn find_metric(&self, name: &str, t: Option<f64>) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name && m.t == t)
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}
