//! Command-line front end: `run`, `sweep`, `validate`, `report`.
//!
//! Exit status is 0 only when every acceptance threshold in the config holds,
//! 1 when a run finished but a threshold failed, and 2 on usage or I/O errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nnls_lab::experiments::report::REPORT_FILE;
use nnls_lab::experiments::sweep::SWEEP_REPORT_FILE;
use nnls_lab::experiments::{self, RunReport, ScenarioConfig, SweepConfig, SweepReport, WORKERS_ENV};

#[derive(Parser)]
#[command(name = "nnls-lab", version, about = "Nonlocal NLS experiments near the ground state")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario config.
    Run { config: PathBuf },
    /// Run a sweep config; cells use a pool sized by the worker variable.
    #[command(after_help = format!("Worker pool size: set {WORKERS_ENV} (default: available cores)."))]
    Sweep { config: PathBuf },
    /// Check a scenario or sweep config without running it.
    Validate { config: PathBuf },
    /// Summarise a run or sweep output directory.
    Report { dir: PathBuf },
}

fn verdict(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn is_sweep(text: &str) -> bool {
    serde_json::from_str::<serde_json::Value>(text)
        .ok()
        .is_some_and(|v| v.get("axes").is_some())
}

fn validate(path: &Path) -> nnls_lab::Result<String> {
    let text = std::fs::read_to_string(path)?;
    if is_sweep(&text) {
        let cfg = SweepConfig::from_json(&text)?;
        Ok(format!("valid sweep config: {} cells, hash {}", cfg.cells()?.len(), cfg.hash()))
    } else {
        let cfg = ScenarioConfig::from_json(&text)?;
        Ok(format!("valid {:?} config, hash {}", cfg.scenario.kind(), cfg.hash()))
    }
}

fn report(dir: &Path) -> nnls_lab::Result<bool> {
    if dir.join(SWEEP_REPORT_FILE).exists() {
        let r = SweepReport::load(dir)?;
        print!("{}", r.summary());
        let stored = std::fs::read_to_string(dir.join(experiments::sweep::AGGREGATE_FILE))?;
        if r.reaggregate(dir)? != stored {
            println!("  warning: aggregate.csv differs from the cell reports");
            return Ok(false);
        }
        Ok(r.all_accepted)
    } else if dir.join(REPORT_FILE).exists() {
        let r = RunReport::load(dir)?;
        print!("{}", r.summary());
        if !r.hash_matches() {
            println!("  warning: config hash does not match the echoed config");
            return Ok(false);
        }
        Ok(r.accepted())
    } else {
        Err(nnls_lab::Error::Config(format!("no report found in {}", dir.display())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => ScenarioConfig::load(config).and_then(|cfg| {
            let r = experiments::run(&cfg)?;
            print!("{}", r.summary());
            println!("output: {}", cfg.output_dir.display());
            Ok(r.accepted())
        }),
        Command::Sweep { config } => SweepConfig::load(config).and_then(|cfg| {
            let r = experiments::run_sweep(&cfg)?;
            print!("{}", r.summary());
            println!("output: {}", cfg.output_dir.display());
            Ok(r.all_accepted)
        }),
        Command::Validate { config } => validate(config).map(|msg| {
            println!("{msg}");
            true
        }),
        Command::Report { dir } => report(dir),
    };
    match result {
        Ok(ok) => verdict(ok),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
