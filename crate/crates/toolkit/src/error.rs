use std::path::PathBuf;

use thiserror::Error;

use crate::runner::RunRecord;

#[derive(Debug, Error)]
pub enum ToolError {
    #[error("not found: {0}")]
    NotFound(PathBuf),
    #[error("path outside sandbox: {0}")]
    OutsideSandbox(PathBuf),
    #[error("{0} is a binary file; use view_image or convert_to_image instead")]
    BinaryFile(PathBuf),
    #[error("command refused by denylist pattern `{0}`")]
    SandboxViolation(String),
    #[error("timed out after {seconds} s; partial log at {}", record.log_path.display())]
    Timeout { seconds: u64, record: Box<RunRecord> },
    #[error("interpreter for {interpreter} not installed (tried {})", tried.join(", "))]
    InterpreterMissing { interpreter: String, tried: Vec<String> },
    #[error("no interpreter mapped to extension `{0}`; pass an interpreter override")]
    UnknownInterpreter(String),
    #[error("exited with code {}; log at {}", record.exit_code, record.log_path.display())]
    NonzeroExit { record: Box<RunRecord> },
    #[error("search text not found in {0}")]
    NoMatch(PathBuf),
    #[error("search text occurs {count} times in {path}; supply a longer anchor")]
    AmbiguousMatch { path: PathBuf, count: usize },
    #[error("unreadable PDF: {0}")]
    UnreadablePdf(String),
    #[error("PDF is encrypted")]
    EncryptedPdf,
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("active model does not accept images")]
    NotMultimodal,
    #[error("render failure: {0}")]
    RenderFailure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
    #[error("io error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl ToolError {
    pub fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        let path = path.into();
        if err.kind() == std::io::ErrorKind::NotFound {
            return ToolError::NotFound(path);
        }
        ToolError::Io {
            path,
            message: err.to_string(),
        }
    }

    /// Stable short code used in tool results and logs.
    pub fn code(&self) -> &'static str {
        match self {
            ToolError::NotFound(_) => "NotFound",
            ToolError::OutsideSandbox(_) => "OutsideSandbox",
            ToolError::BinaryFile(_) => "BinaryFile",
            ToolError::SandboxViolation(_) => "SandboxViolation",
            ToolError::Timeout { .. } => "Timeout",
            ToolError::InterpreterMissing { .. } => "InterpreterMissing",
            ToolError::UnknownInterpreter(_) => "UnknownInterpreter",
            ToolError::NonzeroExit { .. } => "NonzeroExit",
            ToolError::NoMatch(_) => "NoMatch",
            ToolError::AmbiguousMatch { .. } => "AmbiguousMatch",
            ToolError::UnreadablePdf(_) => "UnreadablePdf",
            ToolError::EncryptedPdf => "EncryptedPdf",
            ToolError::UnsupportedFormat(_) => "UnsupportedFormat",
            ToolError::NotMultimodal => "NotMultimodal",
            ToolError::RenderFailure(_) => "RenderFailure",
            ToolError::InvalidArgument(_) => "InvalidArgument",
            ToolError::UnknownTool(_) => "UnknownTool",
            ToolError::Io { .. } => "Io",
        }
    }
}
