//! Scenario runs, configuration and file output on top of `gbc-core`.

pub mod config;
pub mod dilute;
pub mod ensemble;
pub mod error;
pub mod measurement;
pub mod nosignal;
pub mod output;
pub mod relaxation;
pub mod simulate;

pub use config::{parse_config, parse_config_as, ScenarioConfig, ScenarioKind};
pub use error::{ConfigError, LabError, LabResult};
pub use output::{write_outputs, CsvTable, RunInfo, ScenarioOutput};

/// Runs the configured scenario and packages its report for writing.
pub fn run_scenario(cfg: &ScenarioConfig) -> LabResult<ScenarioOutput> {
    match cfg.kind {
        ScenarioKind::Simulate => simulate::run_simulation(cfg)?.into_output(cfg),
        ScenarioKind::Measurement => measurement::run_measurement_scenario(cfg)?.into_output(cfg),
        ScenarioKind::Nosignaling => nosignal::run_nosignaling_scenario(cfg)?.into_output(cfg),
        ScenarioKind::Relaxation => relaxation::run_relaxation_scenario(cfg)?.into_output(cfg),
        ScenarioKind::Dilute => dilute::run_dilute_scenario(cfg)?.into_output(cfg),
        ScenarioKind::Fock => dilute::run_fock_scenario(cfg)?.into_output(cfg),
    }
}
