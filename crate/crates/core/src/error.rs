use std::path::PathBuf;

use thiserror::Error;

use crate::sparse::IndexSpace;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed simplex {simplex:?}: {reason}")]
    MalformedSimplex {
        simplex: Vec<usize>,
        reason: &'static str,
    },

    #[error("invalid cell complex: {0}")]
    InvalidComplex(String),

    #[error("operator index spaces do not match: left cols {left}, right rows {right}")]
    SpaceMismatch { left: IndexSpace, right: IndexSpace },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("operator is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
