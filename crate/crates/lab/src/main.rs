use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use gbc_lab::{
    parse_config_as, run_scenario, write_outputs, LabError, LabResult, RunInfo, ScenarioKind,
};

#[derive(Parser)]
#[command(
    name = "gbc",
    version,
    about = "Bohmian-sourced gravitational collapse scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding `[run] output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    #[arg(long = "snapshot-stride", global = true, value_parser = clap::value_parser!(u64).range(1..))]
    snapshot_stride: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Evolve Gaussian orbitals and record density and trajectories.
    Simulate,
    /// Two-branch measurement: Born statistics, amplification sweep, control.
    Measure,
    /// Bob's marginal under two settings on Alice's side.
    Nosignal,
    /// Coarse-grained H-function relaxation.
    Relax,
    /// Correlations, localization rates and the SI timescale.
    Dilute,
    /// Number-state correlations with the occupation-basis cross-check.
    Fock,
}

impl Command {
    fn kind(self) -> ScenarioKind {
        match self {
            Command::Simulate => ScenarioKind::Simulate,
            Command::Measure => ScenarioKind::Measurement,
            Command::Nosignal => ScenarioKind::Nosignaling,
            Command::Relax => ScenarioKind::Relaxation,
            Command::Dilute => ScenarioKind::Dilute,
            Command::Fock => ScenarioKind::Fock,
        }
    }
}

fn run(cli: Cli) -> LabResult<Vec<PathBuf>> {
    let started = Instant::now();
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|source| LabError::Io {
            path: path.clone(),
            source,
        })?,
        None => String::new(),
    };
    let kind = cli.command.kind();
    let mut cfg = parse_config_as(&text, kind).map_err(LabError::Config)?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(w) = cli.workers {
        cfg.run.workers = w as usize;
    }
    if let Some(k) = cli.snapshot_stride {
        cfg.run.snapshot_stride = k as usize;
    }
    let dir = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.run.output));
    let output = run_scenario(&cfg)?;
    let info = RunInfo {
        command: kind.name().to_string(),
        config: serde_json::to_value(&cfg)?,
        seed: cfg.run.seed,
        workers: cfg.run.workers,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    write_outputs(&[output], &dir, &info)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
