use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabelerError {
    #[error("{path}: {source}")]
    Schema {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid ontology: {0}")]
    Validation(String),

    #[error("line {line}: {message}")]
    Corpus { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = LabelerError> = std::result::Result<T, E>;
