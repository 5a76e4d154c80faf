use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    /// Bad or inconsistent configuration; `field` is a dotted path into the scenario.
    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("numerical failure: {0}")]
    Numerical(kdv_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl LabError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        LabError::Config { field: field.into(), reason: reason.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config { .. } => 2,
            _ => 3,
        }
    }

    /// Maps a core error raised while running experiment `kind`. Argument and
    /// resolution-guard failures are reported as configuration errors since
    /// they are detected before any integration starts.
    pub fn from_core(kind: &str, e: kdv_core::Error) -> Self {
        match e {
            kdv_core::Error::InvalidArgument { name, reason } => LabError::config(format!("experiment.{name}"), reason),
            kdv_core::Error::Resolution(reason) => LabError::config(format!("experiment ({kind})"), reason),
            kdv_core::Error::BandLimit { reason, .. } => LabError::config("experiment.k", reason),
            other => LabError::Numerical(other),
        }
    }
}
