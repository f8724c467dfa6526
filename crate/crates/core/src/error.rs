use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("no records")]
    NoRecords,

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("signal too short: length {length}, need at least {min}")]
    TooShort { length: usize, min: usize },

    #[error("matrix too small: {rows}x{cols}, need at least 3x3")]
    MatrixTooSmall { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),

    #[error("unknown class label {0:?}")]
    UnknownClass(String),

    #[error("undefined for zero vector")]
    ZeroVector,

    #[error("model format: {0}")]
    ModelVersion(String),

    #[error("model file truncated: {0}")]
    Truncated(String),

    #[error("degenerate filter bank after {0} draws")]
    DegenerateBank(u32),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
