use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("taxonomy: {0}")]
    Taxonomy(String),

    #[error("duplicate review_id {0:?}")]
    DuplicateReview(String),

    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),

    #[error("feature ({leaf}, {sentiment}) is not in the vocabulary")]
    UnknownFeature { leaf: String, sentiment: String },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("empty domain {0:?}: no mentions to build a reference from")]
    EmptyDomain(String),

    #[error("extraction response is not valid JSON: {0}")]
    UnparseableResponse(String),

    #[error("lexicon: {0}")]
    Lexicon(String),

    #[error("cache entry {entry}: {message}")]
    CacheCorrupt { entry: String, message: String },

    #[error("client: {0}")]
    Client(String),

    #[error("empty model output")]
    EmptyOutput,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

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
