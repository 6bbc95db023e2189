use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Cholesky factorization hit a non-positive pivot.
    #[error("matrix is not positive (semi-)definite: leading minor {minor} has pivot {pivot:e}")]
    Decomposition { minor: usize, pivot: f64 },

    #[error("truncated inverse gamma has negligible mass below {upper:e} (mass {mass:e})")]
    DegenerateTruncation { upper: f64, mass: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{path}: row {row}: {message}")]
    Row {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Whether the error stems from configuration or input rather than a
    /// numeric breakdown during sampling.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::InvalidInput(_)
                | Error::Row { .. }
                | Error::File { .. }
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
