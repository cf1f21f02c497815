use thiserror::Error;

use crate::dataset::RecordError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {reason}")]
    Record {
        file: String,
        line: usize,
        reason: RecordError,
    },

    #[error("{0} contains no records")]
    EmptyDataset(String),

    #[error("degenerate dataset: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("configuration mismatch with {peer}: {field} is {ours} here but {theirs} there")]
    ConfigMismatch {
        peer: String,
        field: &'static str,
        ours: String,
        theirs: String,
    },

    #[error("malformed payload: {0}")]
    Payload(String),

    #[error("result {value} exceeds the scale {scale}")]
    ResultOutOfRange { value: u64, scale: u64 },

    #[error(transparent)]
    Core(#[from] auc3pc_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
