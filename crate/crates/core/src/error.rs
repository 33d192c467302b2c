use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the encoder kernel.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("truncated input: {0}")]
    Truncated(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("sequencing error: {0}")]
    Sequencing(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
