//! Orbital distance and bootstrap observables for tiered data, both time
//! directions, through the config-driven scenario.
//!
//! cargo run --release --example stability_window [t_max]

use nnls_lab::experiments::config::{Scenario, StabilityWindowParams};
use nnls_lab::experiments::{self, ScenarioConfig};

fn main() -> nnls_lab::Result<()> {
    let t_max: f64 = std::env::args().nth(1).map_or(20.0, |s| s.parse().expect("t_max"));
    let params = StabilityWindowParams {
        epsilons: vec![1e-2, 3e-3, 1e-3],
        t_max,
        ..Default::default()
    };
    let mut cfg = ScenarioConfig::new(Scenario::StabilityWindow(params), std::env::temp_dir().join("nnls-window"));
    cfg.solver.dt = 2e-3;
    let report = experiments::run(&cfg)?;
    print!("{}", report.summary());
    println!("series written to {}", cfg.output_dir.display());
    Ok(())
}
