use std::path::{Path, PathBuf};

use cxr_core::CoreError;
use cxr_labeler::LabelerError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Degenerate(String),

    #[error("{0}")]
    Internal(String),
}

impl CliError {
    /// 0 success, 2 I/O, 3 configuration, 4 degenerate data.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Input(_) => 2,
            CliError::Config(_) => 3,
            CliError::Degenerate(_) => 4,
            CliError::Internal(_) => 1,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::Io(source) => CliError::Io {
                path: PathBuf::new(),
                source,
            },
            CoreError::Format(_) => CliError::Input(msg),
            CoreError::Config(_) | CoreError::Shape(_) => CliError::Config(msg),
            CoreError::Degenerate(_) | CoreError::Argument(_) => CliError::Degenerate(msg),
            CoreError::NonFinite { .. } => CliError::Internal(msg),
        }
    }
}

impl From<LabelerError> for CliError {
    fn from(e: LabelerError) -> Self {
        match e {
            LabelerError::Io(source) => CliError::Io {
                path: PathBuf::new(),
                source,
            },
            LabelerError::Corpus { .. } => CliError::Input(e.to_string()),
            LabelerError::Schema { .. } | LabelerError::Validation(_) => CliError::Config(e.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_are_stable() {
        assert_eq!(CliError::io(Path::new("x"), std::io::ErrorKind::NotFound.into()).exit_code(), 2);
        assert_eq!(CliError::from(CoreError::Format("bad".into())).exit_code(), 2);
        assert_eq!(CliError::from(CoreError::Config("bad".into())).exit_code(), 3);
        assert_eq!(CliError::from(CoreError::Degenerate("one class".into())).exit_code(), 4);
        assert_eq!(CliError::from(LabelerError::Validation("dup".into())).exit_code(), 3);
        assert_eq!(
            CliError::from(LabelerError::Corpus {
                line: 2,
                message: "bad".into()
            })
            .exit_code(),
            2
        );
    }
}
