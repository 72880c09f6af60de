use std::path::PathBuf;

use chrono::NaiveDate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("no documents survived filtering")]
    EmptyCorpus,

    #[error("{0}")]
    InvalidArgument(String),

    #[error("insufficient margin: {missing} margin dates missing {side} the interval")]
    InsufficientMargin { missing: usize, side: &'static str },

    #[error("vocabulary is empty after pruning")]
    EmptyVocabulary,

    #[error("embedding file: {0}")]
    EmbeddingFormat(String),

    #[error("embedding id `{0}` absent from embedding file")]
    MissingEmbedding(String),

    #[error("task for candidate {candidate} has no validation documents in class {class}")]
    EmptyValidationClass { candidate: NaiveDate, class: u8 },

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("probability vector: {0}")]
    InvalidDistribution(String),

    #[error("category `{category}` has no documents on {date}")]
    MissingCategory { date: NaiveDate, category: String },

    #[error("event list is empty")]
    NoEvents,

    #[error("http error: {0}")]
    Http(String),

    #[error("authorization rejected (status {status}): {body}")]
    Unauthorized { status: u16, body: String },

    #[error("serialization error: {0}")]
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
