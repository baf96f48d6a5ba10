use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("row {row}, column {column:?}: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("fewer than 2 classes ({0} found)")]
    TooFewClasses(usize),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("split leaves an empty partition (train {train}, test {test})")]
    DegenerateSplit { train: usize, test: usize },

    #[error("schema version mismatch: file has {found:?}, reader supports {expected:?}")]
    SchemaVersion { found: String, expected: String },

    #[error("bitstring width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("bitstring {0} not present in table")]
    UnknownBitstring(String),

    #[error("empty table")]
    EmptyTable,

    #[error("malformed record {index}: {message}")]
    MalformedRecord { index: u64, message: String },

    #[error("bitstring table exceeded its memory budget of {budget} bytes")]
    TableBudgetExceeded { budget: usize },

    #[error("{n_qubits} qubits exceeds the statevector cap of {cap}")]
    QubitCap { n_qubits: usize, cap: usize },

    #[error("empty source: {0}")]
    EmptySource(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
