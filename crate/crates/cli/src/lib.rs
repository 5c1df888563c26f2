//! Experiment runner: configuration documents, single runs with artifact
//! export, parameter sweeps and connectivity reports.

pub mod config;
pub mod connectivity;
pub mod pipeline;
pub mod sweep;

pub use config::{ExperimentConfig, Generator, Mode, ScenarioSource, SweepGrid};
pub use connectivity::{connectivity_report, ConnectivityReport};
pub use pipeline::{execute, run, write_artifacts, RunOutcome};
pub use sweep::{grid_points, sweep, write_sweep, write_sweep_csv, SweepRow};
