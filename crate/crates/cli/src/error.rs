use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Validation { path: String, message: String },
    #[error("cannot read config {path}: {source}")]
    ConfigRead { path: PathBuf, source: std::io::Error },
    #[error("config {path} is not valid TOML: {message}")]
    ConfigParse { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] randhull_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("calibration store {path}: {message}")]
    Store { path: PathBuf, message: String },
    #[error("{0}")]
    Band(String),
}

impl CliError {
    pub fn validation(path: impl Into<String>, message: impl Into<String>) -> CliError {
        CliError::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for invalid input, 2 for numeric or i/o failures, 3 for a
    /// measurement outside its acceptance band.
    pub fn exit_code(&self) -> u8 {
        use randhull_core::Error as E;
        match self {
            CliError::Validation { .. } | CliError::ConfigRead { .. } | CliError::ConfigParse { .. } => 1,
            CliError::Core(
                E::Dimension(_)
                | E::InvalidArgument(_)
                | E::InvalidDensity(_)
                | E::NoRollingBall
                | E::Route(_)
                | E::MissingCalibration { .. },
            ) => 1,
            CliError::Band(_) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
