use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("row {row}: unknown diagnosis symbol {symbol:?} (expected M or B)")]
    UnknownDiagnosis { row: usize, symbol: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("column {column} has zero variance")]
    ConstantColumn { column: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("dual solver did not converge after {iterations} sweeps (max KKT violation {violation:.3e})")]
    NotConverged { iterations: usize, violation: f64 },

    #[error("released weight vector is zero")]
    ZeroWeights,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("no prototype for class {class:+} satisfies the confidence condition (best margin {best_margin:.6})")]
    PrototypeNotFound { class: i8, best_margin: f64 },

    #[error("bisection exceeded {0} iterations")]
    BisectionLimit(usize),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) => ErrorKind::Usage,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::UnknownDiagnosis { .. }
            | Error::Empty(_)
            | Error::InvalidData(_)
            | Error::ConstantColumn { .. }
            | Error::DimensionMismatch { .. }
            | Error::Serialization(_) => ErrorKind::Data,
            Error::NotConverged { .. }
            | Error::ZeroWeights
            | Error::Precondition(_)
            | Error::PrototypeNotFound { .. }
            | Error::BisectionLimit(_) => ErrorKind::Numerical,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
