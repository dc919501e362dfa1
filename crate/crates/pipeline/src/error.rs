use std::path::PathBuf;

use repro_core::InputError;
use thiserror::Error;

/// Errors that stop a run before any agent starts. Once the workspace is
/// initialized every failure is absorbed and a score file is still emitted.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("workspace {0} already exists and is not empty")]
    WorkspaceNotEmpty(PathBuf),
    #[error("workspace {path}: {message}")]
    Workspace { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl PipelineError {
    pub(crate) fn workspace(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Self::Workspace {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }
}
