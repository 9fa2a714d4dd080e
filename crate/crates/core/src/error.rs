//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed binary payload or image file.
    #[error("format error: {0}")]
    Format(String),

    /// An operation precondition was violated (shape or dimension mismatch,
    /// out-of-range argument).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Invalid solver or run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Method name not present in the registry.
    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    /// Registered method without a built-in solver; its results enter via
    /// raw-results CSV ingestion only.
    #[error("method `{0}` has no built-in solver; ingest its raw results through the `score` pipeline instead")]
    UnsupportedMethod(String),

    /// Solver state became non-finite.
    #[error("solver diverged at iteration {iteration}: {reason}")]
    Divergence { iteration: usize, reason: String },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    /// Row-level CSV or config-file parse failure.
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// A raw-result table is missing one of the 30 (dataset, ratio) cells,
    /// or contains one twice.
    #[error("result table for `{method}` is {kind} at ({dataset}, {ratio})")]
    TableCell {
        method: String,
        kind: TableCellError,
        dataset: String,
        ratio: u32,
    },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    /// Elapsed time too small to quote a throughput.
    #[error("timer resolution too coarse: {0}")]
    TimerResolution(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableCellError {
    Missing,
    Duplicate,
}

impl std::fmt::Display for TableCellError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TableCellError::Missing => write!(f, "missing a cell"),
            TableCellError::Duplicate => write!(f, "duplicated"),
        }
    }
}

impl Error {
    /// Wrap an I/O failure with the path it happened on.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
