use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the deformation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("point {point} has a non-finite coordinate on axis {axis}")]
    NonFinite { point: usize, axis: usize },

    #[error("point index {index} out of range for a cloud of {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("{path}: row {row}, column {column}: {message}")]
    Ingest {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("deforming field is not finite at point {point}")]
    Instability { point: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
