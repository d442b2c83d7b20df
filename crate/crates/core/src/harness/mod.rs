//! Experiment orchestration: configuration, paired Monte-Carlo runs,
//! sweeps, and CSV/manifest export.

pub mod config;
pub mod experiment;
pub mod export;

pub use config::{parse_config, parse_config_with_base, ExperimentConfig, SweepAxis, PRESETS};
pub use experiment::{
    derive_run_seed, run_experiment, run_monte_carlo, run_sweep, CurveSummary, RunArtifacts,
    RunOutcome, RunRecord, SweepArtifacts, SweepChecks, SweepPoint,
};
pub use export::{export_artifacts, export_sweep, ExportedRun, ExportedSweep};
