//! Batch front end: JSON experiment configs in, CSV/JSON artifacts out.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_certify, cmd_dini, cmd_measure, cmd_solve, cmd_sweep, Outcome, SweepAxis};
pub use config::{ExperimentConfig, Overrides, OUTPUT_ROOT_VAR};
pub use error::CliError;
