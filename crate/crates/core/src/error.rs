use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("format error: {0}")]
    Format(String),

    #[error("vocabulary is empty: {0}")]
    EmptyVocabulary(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("unknown token `{0}`")]
    Lookup(String),

    #[error("similarity undefined: {0}")]
    Similarity(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("cannot emit plot data: {0}")]
    Emit(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the failure stems from bad user input rather than the run itself.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
