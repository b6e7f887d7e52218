//! Cross-product parameter sweeps over a base scenario config.
//!
//! ```json
//! {
//!   "version": 1,
//!   "base": { "version": 1, "scenario": "blowup", "output_dir": "unused", ... },
//!   "axes": [
//!     { "pointer": "/params/beta", "values": [0.85, 0.9, 0.95] }
//!   ],
//!   "output_dir": "out/sweep"
//! }
//! ```
//!
//! Axis pointers are JSON pointers into the fully expanded base config, so
//! defaulted fields can be swept too. Cells run on a rayon pool whose size is
//! read from [`WORKERS_ENV`].

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{hash_value, ScenarioConfig, SCHEMA_VERSION};
use super::report::{RunReport, RunStatus};
use crate::error::{Error, Result};

pub const WORKERS_ENV: &str = "NNLS_LAB_WORKERS";
pub const SWEEP_REPORT_FILE: &str = "sweep_report.json";
pub const AGGREGATE_FILE: &str = "aggregate.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub pointer: String,
    pub values: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub version: u32,
    pub base: ScenarioConfig,
    pub axes: Vec<SweepAxis>,
    pub output_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub index: usize,
    pub dir: String,
    pub values: Vec<Value>,
    pub status: RunStatus,
    pub accepted: bool,
    pub config_hash: String,
    pub headline: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config_hash: String,
    pub pointers: Vec<String>,
    pub cells: Vec<CellSummary>,
    /// Largest value of each headline metric over the cells that report it.
    pub max_headline: BTreeMap<String, f64>,
    pub failed_cells: Vec<usize>,
    pub all_accepted: bool,
    pub wall_seconds: f64,
}

fn set_pointer(root: &mut Value, pointer: &str, value: Value) -> Result<()> {
    match root.pointer_mut(pointer) {
        Some(slot) => {
            *slot = value;
            Ok(())
        }
        None => Err(Error::Config(format!("sweep pointer `{pointer}` does not exist in the base config"))),
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn hash(&self) -> String {
        hash_value(&serde_json::to_value(self).expect("sweep config serialises"))
    }

    /// Checks the schema and builds every cell config, so a sweep never
    /// starts with an invalid cell.
    pub fn validate(&self) -> Result<()> {
        self.cells().map(|_| ())
    }

    /// `(axis values, cell config)` in row-major order of the axes.
    pub fn cells(&self) -> Result<Vec<(Vec<Value>, ScenarioConfig)>> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.version
            )));
        }
        if self.axes.is_empty() {
            return Err(Error::Config("sweep needs at least one axis".into()));
        }
        if let Some(a) = self.axes.iter().find(|a| a.values.is_empty()) {
            return Err(Error::Config(format!("sweep axis `{}` has no values", a.pointer)));
        }
        if self.axes.iter().any(|a| a.pointer == "/output_dir") {
            return Err(Error::Config("output_dir is assigned per cell and cannot be swept".into()));
        }
        self.base.validate()?;
        let base = self.base.to_value();
        let total: usize = self.axes.iter().map(|a| a.values.len()).product();
        let mut out = Vec::with_capacity(total);
        for index in 0..total {
            let mut rem = index;
            let mut picks = vec![Value::Null; self.axes.len()];
            for (k, axis) in self.axes.iter().enumerate().rev() {
                picks[k] = axis.values[rem % axis.values.len()].clone();
                rem /= axis.values.len();
            }
            let mut v = base.clone();
            for (axis, pick) in self.axes.iter().zip(&picks) {
                set_pointer(&mut v, &axis.pointer, pick.clone())?;
            }
            let dir = self.output_dir.join(cell_dir_name(index));
            set_pointer(&mut v, "/output_dir", Value::String(dir.to_string_lossy().into_owned()))?;
            let cell: ScenarioConfig = serde_json::from_value(v)
                .map_err(|e| Error::Config(format!("cell {index}: {e}")))?;
            cell.validate().map_err(|e| Error::Config(format!("cell {index}: {e}")))?;
            out.push((picks, cell));
        }
        Ok(out)
    }
}

pub fn cell_dir_name(index: usize) -> String {
    format!("cell_{index:03}")
}

/// Pool size from [`WORKERS_ENV`], falling back to the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn summarise(index: usize, values: Vec<Value>, report: &RunReport) -> CellSummary {
    CellSummary {
        index,
        dir: cell_dir_name(index),
        values,
        status: report.status,
        accepted: report.accepted(),
        config_hash: report.config_hash.clone(),
        headline: report.headline.clone(),
    }
}

fn render_value(v: &Value) -> String {
    match v {
        Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), |f| format!("{f:e}")),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Aggregate table: one row per cell, axis values, status, then every
/// headline metric seen in any cell (sorted by name, empty where absent).
pub fn aggregate_csv(pointers: &[String], cells: &[CellSummary]) -> String {
    let metrics: BTreeSet<&String> = cells.iter().flat_map(|c| c.headline.keys()).collect();
    let mut out = String::from("cell");
    for p in pointers {
        out.push(',');
        out.push_str(p);
    }
    out.push_str(",status,accepted");
    for m in &metrics {
        out.push(',');
        out.push_str(m);
    }
    out.push('\n');
    for c in cells {
        out.push_str(&c.index.to_string());
        for v in &c.values {
            out.push(',');
            out.push_str(&render_value(v));
        }
        let status = serde_json::to_value(c.status).ok();
        out.push(',');
        out.push_str(status.as_ref().and_then(Value::as_str).unwrap_or("?"));
        out.push_str(if c.accepted { ",1" } else { ",0" });
        for m in &metrics {
            out.push(',');
            if let Some(v) = c.headline.get(*m) {
                out.push_str(&format!("{v:e}"));
            }
        }
        out.push('\n');
    }
    out
}

fn max_headline(cells: &[CellSummary]) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for c in cells {
        for (k, v) in &c.headline {
            let e = out.entry(k.clone()).or_insert(*v);
            *e = e.max(*v);
        }
    }
    out
}

/// Runs every cell and writes `aggregate.csv` and `sweep_report.json`.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    let start = Instant::now();
    let cells = cfg.cells()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<CellSummary> = pool.install(|| {
        cells
            .into_par_iter()
            .enumerate()
            .map(|(i, (values, cell))| {
                let report = match super::run(&cell) {
                    Ok(r) => r,
                    Err(e) => RunReport::failed(&cell, &e, 0.0),
                };
                summarise(i, values, &report)
            })
            .collect()
    });
    let pointers: Vec<String> = cfg.axes.iter().map(|a| a.pointer.clone()).collect();
    std::fs::write(cfg.output_dir.join(AGGREGATE_FILE), aggregate_csv(&pointers, &results))?;
    let failed_cells: Vec<usize> = results
        .iter()
        .filter(|c| c.status == RunStatus::Failed)
        .map(|c| c.index)
        .collect();
    let report = SweepReport {
        config_hash: cfg.hash(),
        pointers,
        all_accepted: results.iter().all(|c| c.accepted),
        max_headline: max_headline(&results),
        failed_cells,
        cells: results,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    std::fs::write(
        cfg.output_dir.join(SWEEP_REPORT_FILE),
        serde_json::to_string_pretty(&report)? + "\n",
    )?;
    Ok(report)
}

impl SweepReport {
    pub fn load(dir: impl AsRef<Path>) -> Result<SweepReport> {
        let text = std::fs::read_to_string(dir.as_ref().join(SWEEP_REPORT_FILE))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Rebuilds the aggregate table from the per-cell reports on disk.
    pub fn reaggregate(&self, dir: impl AsRef<Path>) -> Result<String> {
        let mut cells = Vec::with_capacity(self.cells.len());
        for c in &self.cells {
            let report = RunReport::load(dir.as_ref().join(&c.dir))?;
            cells.push(summarise(c.index, c.values.clone(), &report));
        }
        Ok(aggregate_csv(&self.pointers, &cells))
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "sweep  {} cells  failed {:?}  all accepted {}  wall {:.2}s\n",
            self.cells.len(),
            self.failed_cells,
            self.all_accepted,
            self.wall_seconds
        );
        for c in &self.cells {
            let values: Vec<String> = c.values.iter().map(render_value).collect();
            out.push_str(&format!(
                "  {} [{}] {:?} accepted={}\n",
                c.dir,
                values.join(", "),
                c.status,
                c.accepted
            ));
        }
        for (k, v) in &self.max_headline {
            out.push_str(&format!("  max {k:<28} {v:.6e}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sweep(axes: &str) -> String {
        format!(
            r#"{{
                "version": 1,
                "base": {{
                    "version": 1, "scenario": "lower_bound",
                    "params": {{ "samples": 3, "divergence_grid": {{ "n": 1024, "length": 64.0 }} }},
                    "grid": {{ "n": 256, "length": 64.0 }},
                    "output_dir": "ignored"
                }},
                "axes": {axes},
                "output_dir": "out"
            }}"#
        )
    }

    #[test]
    fn cross_product_order() {
        let cfg = SweepConfig::from_json(&sweep(
            r#"[{"pointer": "/params/beta", "values": [0.95, 0.99]},
                {"pointer": "/params/t_window", "values": [1.0, 2.0, 3.0]}]"#,
        ))
        .unwrap();
        let cells = cfg.cells().unwrap();
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[1].0, vec![Value::from(0.95), Value::from(2.0)]);
        assert_eq!(cells[3].0, vec![Value::from(0.99), Value::from(1.0)]);
        assert_eq!(cells[5].1.output_dir, Path::new("out").join("cell_005"));
    }

    #[test]
    fn empty_sweeps_are_rejected() {
        assert!(SweepConfig::from_json(&sweep("[]")).is_err());
        assert!(SweepConfig::from_json(&sweep(r#"[{"pointer": "/params/beta", "values": []}]"#)).is_err());
        assert!(SweepConfig::from_json(&sweep(r#"[{"pointer": "/params/nope", "values": [1]}]"#)).is_err());
    }

    #[test]
    fn invalid_cells_fail_validation() {
        let s = sweep(r#"[{"pointer": "/params/beta", "values": [0.5]}]"#);
        assert!(SweepConfig::from_json(&s).is_err());
    }

    #[test]
    fn aggregate_is_a_function_of_cells() {
        let mut h = BTreeMap::new();
        h.insert("x".to_string(), 0.5);
        let cells = vec![CellSummary {
            index: 0,
            dir: cell_dir_name(0),
            values: vec![Value::from(1.0)],
            status: RunStatus::Completed,
            accepted: true,
            config_hash: String::new(),
            headline: h,
        }];
        let csv = aggregate_csv(&["/p".into()], &cells);
        assert_eq!(csv, "cell,/p,status,accepted,x\n0,1e0,completed,1,5e-1\n");
    }
}
