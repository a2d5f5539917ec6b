//! Experiment driver for `randhull-core`: TOML configs, CSV result rows, the
//! calibration store and the subcommand implementations behind `randhull`.

pub mod commands;
pub mod config;
pub mod error;
pub mod records;
pub mod store;

pub use config::{ExperimentConfig, ValidatedConfig};
pub use error::{CliError, CliResult};
pub use records::ResultRecord;
