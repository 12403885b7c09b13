//! Experiment runner for entanglement-link quench studies: configuration
//! parsing, the measurement and prediction pipeline, CSV artifacts with a
//! hash manifest, and comparison reports.

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod error;
pub mod oracle;
pub mod report;
pub mod runner;

pub use cli::run_cli;
pub use config::{parse_config, parse_config_with_overrides, serialize_config, ExperimentConfig};
pub use error::CliError;
pub use report::{compare_report, ComparisonReport};
pub use runner::{run_experiment, RunOutput};
