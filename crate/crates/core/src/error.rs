use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty column")]
    EmptyColumn,

    #[error("column index {index} out of range for table `{table}` with {columns} columns")]
    ColumnOutOfRange {
        table: String,
        index: usize,
        columns: usize,
    },

    #[error("column {index} of table `{table}` is {kind}, only entity columns can be prediction targets")]
    NotEntityColumn {
        table: String,
        index: usize,
        kind: String,
    },

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("duplicate class id `{0}` in catalog")]
    DuplicateClass(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{path}:{line}: {message}")]
    Syntax {
        path: String,
        line: usize,
        message: String,
    },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },

    #[error("class catalog mismatch: model was trained against {expected}, got {found}")]
    CatalogMismatch { expected: String, found: String },

    #[error("HNN checkpoint mismatch: ensemble was trained on {expected}, got {found}")]
    ModelMismatch { expected: String, found: String },

    #[error("run configuration fingerprint mismatch: {expected} vs {found}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("no prediction for gold column {table_id}#{column_index}")]
    MissingPrediction { table_id: String, column_index: usize },

    #[error("offline cache miss for {0}")]
    OfflineCacheMiss(String),

    #[error("network error (retryable): {0}")]
    Network(String),

    #[error("malformed endpoint response: {0}")]
    Response(String),

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether retrying the same request may succeed.
    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::Network(_))
    }
}
