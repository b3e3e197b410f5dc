use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure class, used for CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: out-of-domain arguments, malformed files, failed validation.
    Input,
    /// A numerical step failed (factorization, non-finite density, ...).
    Numerical,
    /// Filesystem or network failure.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("ill-conditioned quantile grid at index {index}: p = {p}")]
    IllConditionedGrid { index: usize, p: f64 },

    #[error("invalid grouping: {0}")]
    InvalidGrouping(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("fetch error: {0}")]
    Fetch(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain(_)
            | Error::IllConditionedGrid { .. }
            | Error::InvalidGrouping(_)
            | Error::Validation(_)
            | Error::Parse(_)
            | Error::Csv(_)
            | Error::Json(_) => ErrorKind::Input,
            Error::Numerical(_) | Error::Analysis(_) => ErrorKind::Numerical,
            Error::Io { .. } | Error::Fetch(_) => ErrorKind::Io,
        }
    }

    /// Process exit code: 2 input validation, 3 numerical failure, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::Input => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Io => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
