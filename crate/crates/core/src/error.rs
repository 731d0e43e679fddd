use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model parameter is outside its domain. Parameters are never clamped.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A closed-form rate was requested outside the range where it holds.
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("arrival rate {rate} is outside the stability region (extent {extent})")]
    OutOfRegion { rate: f64, extent: f64 },

    #[error("degenerate channel: {0}")]
    DegenerateChannel(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
