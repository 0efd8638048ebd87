//! Command-line front end for `dptlab`: one subcommand per operation and a
//! config-driven experiment runner that writes one CSV row per instance.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;

pub use commands::{execute, Cli};
pub use config::ExperimentConfig;
pub use error::{CliError, Stage};
pub use experiment::{compute_experiment, run_experiment, ExperimentReport, Row};
