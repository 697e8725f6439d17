use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// Variants are grouped by what went wrong so a caller (the CLI in particular)
/// can map them onto exit statuses without inspecting messages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record at {position}: {message}")]
    MalformedRecord { position: String, message: String },

    #[error("duplicate document id {0:?}")]
    DuplicateId(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("empty vocabulary: every token was removed by the {filter} filter")]
    EmptyVocabulary { filter: &'static str },

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("component {component} lost all responsibility mass at iteration {iteration}")]
    EmptyCluster { component: usize, iteration: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("state mismatch: {0}")]
    Mismatch(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
