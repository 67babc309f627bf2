use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: argument {value} outside the admissible domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("kernel evaluated at coincident points")]
    Singularity,

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("non-finite position at material point {index}")]
    NonFinite { index: usize },

    #[error("blow-up at step {step} (t = {time})")]
    BlowUp { step: u64, time: f64 },

    #[error("geometry failure at step {step} (t = {time}): {reason}")]
    GeometryFailure { step: u64, time: f64, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("invalid config: {0}")]
    Validation(String),

    #[error("failed to parse {path}: {message} (line {line}, column {column})")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("failed to load {path}: {message}")]
    Load { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to usage or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BlowUp { .. }
                | Error::GeometryFailure { .. }
                | Error::NonFinite { .. }
                | Error::InvalidGeometry(_)
                | Error::Singularity
                | Error::Range(_)
        )
    }

    /// Time of failure, for errors raised during time integration.
    pub fn failure_time(&self) -> Option<f64> {
        match self {
            Error::BlowUp { time, .. } | Error::GeometryFailure { time, .. } => Some(*time),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
