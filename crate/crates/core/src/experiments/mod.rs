//! Config-driven scenarios, parameter sweeps and run reports.
//!
//! A run reads a [`ScenarioConfig`], writes CSV artifacts plus `report.json`
//! into the config's `output_dir`, and compares headline metrics against the
//! config's acceptance thresholds.

pub mod config;
pub mod export;
pub mod report;
pub mod scenarios;
pub mod sweep;

use std::path::Path;
use std::time::Instant;

pub use config::{Scenario, ScenarioConfig, ScenarioKind, Threshold};
pub use report::{Check, Outcome, RunReport, RunStatus};
pub use sweep::{run_sweep, SweepAxis, SweepConfig, SweepReport, WORKERS_ENV};

use crate::error::Result;

/// Runs the scenario without touching `cfg.output_dir`; artifacts go to `dir`.
pub fn execute_in(cfg: &ScenarioConfig, dir: &Path) -> Result<Outcome> {
    cfg.validate()?;
    std::fs::create_dir_all(dir)?;
    match &cfg.scenario {
        Scenario::SolitonPropagation(p) => scenarios::soliton_propagation(cfg, p, dir),
        Scenario::Blowup(p) => scenarios::blowup(cfg, p, dir),
        Scenario::StabilityWindow(p) => scenarios::stability_window(cfg, p, dir),
        Scenario::LowerBound(p) => scenarios::lower_bound(cfg, p, dir),
        Scenario::ModulationOdeCheck(p) => scenarios::modulation_ode_check(cfg, p, dir),
        Scenario::Spectrum(p) => scenarios::spectrum(cfg, p, dir),
    }
}

/// Runs the scenario into `cfg.output_dir` and writes `report.json` there.
///
/// Scenario failures end up in the report with status `failed`; only
/// failure to write the report itself is returned as an error.
pub fn run(cfg: &ScenarioConfig) -> Result<RunReport> {
    let start = Instant::now();
    let dir = &cfg.output_dir;
    let report = match execute_in(cfg, dir) {
        Ok(outcome) => RunReport::assemble(cfg, outcome, start.elapsed().as_secs_f64()),
        Err(e) => RunReport::failed(cfg, &e, start.elapsed().as_secs_f64()),
    };
    std::fs::create_dir_all(dir)?;
    report.save(dir)?;
    Ok(report)
}
