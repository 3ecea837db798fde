use std::path::PathBuf;

use thiserror::Error;

use crate::token::TokenId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("duplicate title {title:?} in records {first:?} and {second:?}")]
    DuplicateTitle {
        title: String,
        first: String,
        second: String,
    },

    #[error("duplicate document id {0:?}")]
    DuplicateDocId(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("reserved token id {0} is not allowed here")]
    ReservedToken(TokenId),

    #[error("token id {0} is outside the vocabulary")]
    UnknownToken(TokenId),

    #[error("codec is frozen")]
    FrozenCodec,

    #[error("invalid artifact: {0}")]
    Format(String),

    #[error("prompt template must contain exactly one `{{}}` slot: {0:?}")]
    Template(String),

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("scorer transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },

    #[error("vocabulary hash mismatch: local {local}, remote {remote}")]
    VocabMismatch { local: String, remote: String },

    #[error("constraint has no allowed tokens at the start of decoding")]
    DeadConstraint,

    #[error("token {0} is not allowed by the constraint")]
    InvalidStep(TokenId),

    #[error("decoding reached a dead end: {0}")]
    DeadEnd(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("offset {offset} out of range for length {len}")]
    OutOfRange { offset: usize, len: usize },

    #[error("no index available for document {0:?}")]
    MissingIndex(String),

    #[error("no evaluable items")]
    NoEvaluableItems,

    #[error("unknown sweep axis {0:?}")]
    UnknownAxis(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnknownAxis(_) | Error::Template(_) => 1,
            Error::Inconsistency(_) | Error::InvalidStep(_) => 3,
            _ => 2,
        }
    }
}
