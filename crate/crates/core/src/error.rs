use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("cosine undefined for zero vector")]
    ZeroVector,

    #[error("out-of-vocabulary word `{0}`")]
    OutOfVocabulary(String),

    #[error("document `{doc}` has no embeddable content words")]
    NoEmbeddableWords { doc: String, oov: Vec<String> },

    #[error("document `{0}` has zero total weight")]
    ZeroWeight(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },

    #[error("length mismatch: {left} predictions vs {right} labels")]
    LengthMismatch { left: usize, right: usize },

    #[error("cache file: {0}")]
    CacheFormat(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
