use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("dataset is empty after dropping incomplete rows")]
    EmptyDataset,

    #[error("validation error at row {row}: {message}")]
    Validation { row: usize, message: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: expected width {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("degree of dependency of the full attribute set is zero; no reduct exists")]
    DependencyDegenerate,

    #[error("training diverged at epoch {epoch}: non-finite error")]
    TrainingDiverged { epoch: usize },

    #[error("unimplemented: {0}")]
    Unimplemented(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{stage} failed on fold {fold}: {source}")]
    Fold {
        fold: usize,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
