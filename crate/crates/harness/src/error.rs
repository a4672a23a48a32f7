use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("baseline agent `{0}` not present in results")]
    MissingBaseline(String),

    #[error("report error: {0}")]
    Report(String),

    #[error(transparent)]
    Core(#[from] jpeval_core::CoreError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
