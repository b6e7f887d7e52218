//! Run reports: config echo, headline metrics, acceptance checks, artifacts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{hash_value, ScenarioConfig, Threshold};
use crate::error::{Error, Result};

pub const REPORT_FILE: &str = "report.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// The run finished early (detected blow-up, fit failure, ...); see `notes`.
    Truncated,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub metric: String,
    pub threshold: Threshold,
    pub value: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: Value,
    pub config_hash: String,
    pub headline: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    pub status: RunStatus,
    pub notes: Vec<String>,
    pub wall_seconds: f64,
}

/// What a scenario hands back before checks are applied.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub headline: BTreeMap<String, f64>,
    pub artifacts: Vec<String>,
    pub notes: Vec<String>,
    pub truncated: bool,
}

impl Outcome {
    /// Records a metric; non-finite values are turned into a note instead.
    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        let name = name.into();
        if value.is_finite() {
            self.headline.insert(name, value);
        } else {
            self.notes.push(format!("{name} is not finite ({value})"));
        }
    }

    pub fn flag(&mut self, name: impl Into<String>, value: bool) {
        self.set(name, if value { 1.0 } else { 0.0 });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }
}

pub fn evaluate_checks(acceptance: &BTreeMap<String, Threshold>, headline: &BTreeMap<String, f64>) -> Vec<Check> {
    acceptance
        .iter()
        .map(|(metric, threshold)| {
            let value = headline.get(metric).copied();
            Check {
                metric: metric.clone(),
                threshold: *threshold,
                value,
                passed: value.is_some_and(|v| threshold.admits(v)),
            }
        })
        .collect()
}

impl RunReport {
    pub fn assemble(cfg: &ScenarioConfig, outcome: Outcome, wall_seconds: f64) -> RunReport {
        let config = cfg.to_value();
        let config_hash = hash_value(&config);
        let checks = evaluate_checks(&cfg.acceptance, &outcome.headline);
        RunReport {
            config,
            config_hash,
            checks,
            headline: outcome.headline,
            artifacts: outcome.artifacts,
            status: if outcome.truncated {
                RunStatus::Truncated
            } else {
                RunStatus::Completed
            },
            notes: outcome.notes,
            wall_seconds,
        }
    }

    pub fn failed(cfg: &ScenarioConfig, error: &Error, wall_seconds: f64) -> RunReport {
        let config = cfg.to_value();
        let config_hash = hash_value(&config);
        RunReport {
            config,
            config_hash,
            headline: BTreeMap::new(),
            checks: evaluate_checks(&cfg.acceptance, &BTreeMap::new()),
            artifacts: Vec::new(),
            status: RunStatus::Failed,
            notes: vec![error.to_string()],
            wall_seconds,
        }
    }

    /// True when the run did not fail and every configured threshold holds.
    pub fn accepted(&self) -> bool {
        self.status != RunStatus::Failed && self.checks.iter().all(|c| c.passed)
    }

    /// Re-hashes the echoed config and compares with the stored hash.
    pub fn hash_matches(&self) -> bool {
        hash_value(&self.config) == self.config_hash
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.as_ref().join(REPORT_FILE), text + "\n")?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<RunReport> {
        let text = std::fs::read_to_string(dir.as_ref().join(REPORT_FILE))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Human-readable summary, one metric per line.
    pub fn summary(&self) -> String {
        let scenario = self.config.get("scenario").and_then(Value::as_str).unwrap_or("?");
        let mut out = format!(
            "scenario {scenario}  status {:?}  hash {}  wall {:.2}s\n",
            self.status,
            &self.config_hash[..12.min(self.config_hash.len())],
            self.wall_seconds
        );
        for (k, v) in &self.headline {
            out.push_str(&format!("  {k:<32} {v:.6e}\n"));
        }
        for c in &self.checks {
            let v = c.value.map_or("missing".to_string(), |v| format!("{v:.6e}"));
            let bounds = match (c.threshold.min, c.threshold.max) {
                (Some(a), Some(b)) => format!("[{a:e}, {b:e}]"),
                (Some(a), None) => format!(">= {a:e}"),
                (None, Some(b)) => format!("<= {b:e}"),
                (None, None) => String::new(),
            };
            let mark = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("  {mark} {} = {v} ({bounds})\n", c.metric));
        }
        for n in &self.notes {
            out.push_str(&format!("  note: {n}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::{BlowupParams, Scenario};

    #[test]
    fn checks_and_hash() {
        let cfg = ScenarioConfig::new(Scenario::Blowup(BlowupParams::default()), "out").with_threshold(
            "relative_error",
            Threshold {
                min: None,
                max: Some(0.02),
            },
        );
        let mut o = Outcome::default();
        o.set("relative_error", 0.01);
        let r = RunReport::assemble(&cfg, o, 0.0);
        assert!(r.accepted() && r.hash_matches());
        let mut o = Outcome::default();
        o.set("detected_time", 1.0);
        let r = RunReport::assemble(&cfg, o, 0.0);
        assert!(!r.accepted());
        assert_eq!(r.checks[0].value, None);
    }
}
