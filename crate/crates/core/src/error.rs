//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse grouping of errors, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Argument,
    Data,
    Capacity,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("mode {mode} is out of range for an order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("mode {0} is listed more than once")]
    DuplicateMode(usize),

    #[error(
        "tensor of shape {shape:?} needs {requested} entries, which exceeds the cap of {cap} entries"
    )]
    Capacity {
        shape: Vec<usize>,
        requested: u128,
        cap: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("matrix is not positive definite (pivot {index} is {pivot:e}); consider raising eps")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("triangular factor is singular: zero diagonal entry at {0}")]
    SingularFactor(usize),

    #[error("matrix is not symmetric: |a[{row},{col}] - a[{col},{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{}: file not found", path.display())]
    MissingFile { path: PathBuf },

    #[error("{context}: shape mismatch: {message}")]
    Shape { context: String, message: String },

    #[error("{context}: non-finite value at row {row}, column {col}")]
    NonFinite {
        context: String,
        row: usize,
        col: usize,
    },

    #[error("inconsistent instance counts: {first_name} has {first}, {second_name} has {second}")]
    Inconsistent {
        first_name: String,
        first: usize,
        second_name: String,
        second: usize,
    },

    #[error("{context}: parse error: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Dimension(_)
            | Error::ModeOutOfRange { .. }
            | Error::DuplicateMode(_)
            | Error::InvalidArgument(_) => ErrorCategory::Argument,
            Error::Capacity { .. } => ErrorCategory::Capacity,
            Error::Degenerate(_)
            | Error::NotPositiveDefinite { .. }
            | Error::SingularFactor(_)
            | Error::NotSymmetric { .. }
            | Error::Numerical(_) => ErrorCategory::Numerical,
            Error::MissingFile { .. }
            | Error::Shape { .. }
            | Error::NonFinite { .. }
            | Error::Inconsistent { .. }
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::Json(_) => ErrorCategory::Data,
        }
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
