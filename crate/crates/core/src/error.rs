use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("bag {bag}: {message}")]
    Consistency { bag: String, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("empty bag or value list")]
    EmptyBag,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("stratification infeasible: class {label} has {count} bags but {folds} folds were requested")]
    InfeasibleStratification { label: i8, count: usize, folds: usize },

    #[error("both classes are required, got only label {0}")]
    SingleClass(i8),

    #[error("trace does not belong to this network")]
    StaleTrace,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("split plan does not match dataset: {0}")]
    PlanMismatch(String),

    #[error("model format error: {0}")]
    Model(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    /// Whether this error stems from the file system rather than from content or options.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
