use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cube: {0}")]
    InvalidCube(String),

    #[error("dimension {0} is not supported (1..={max})", max = crate::dyadic::MAX_DIM)]
    UnsupportedDimension(usize),

    #[error("level {0} exceeds the maximum supported level {max}", max = crate::dyadic::MAX_LEVEL)]
    LevelTooDeep(u32),

    #[error("requested level {requested} is finer than cube level {actual}")]
    LevelTooFine { requested: u32, actual: u32 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("exponent {s} outside the admissible range {range}")]
    InvalidExponent { s: f64, range: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate threshold: {0}")]
    DegenerateThreshold(String),

    #[error("need at least 3 usable points for a regression, got {0}")]
    InsufficientPoints(usize),

    #[error("config invariant violated: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("hard invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
