use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("invalid ciphertext: {0}")]
    Ciphertext(String),

    #[error("degenerate node: {0}")]
    DegenerateNode(String),

    #[error("missing feature {feature} (row has {available} values)")]
    MissingFeature { feature: usize, available: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{path}: row {row}, column `{column}`: {reason}")]
    Cell {
        path: String,
        row: usize,
        column: String,
        reason: String,
    },

    #[error("protocol aborted at transcript position {position}: {reason}")]
    Protocol { position: usize, reason: String },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("undefined AUC: {0}")]
    UndefinedAuc(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
