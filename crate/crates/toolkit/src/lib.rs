//! Tools the agents call: sandboxed file access, script runners with log
//! capture, copy-on-write editing, PDF element extraction, image
//! conversion and Markdown-to-PDF rendering.

pub mod config;
pub mod convert;
pub mod edit;
pub mod error;
pub mod pdf;
pub mod process;
pub mod raster;
pub mod runner;
pub mod sandbox;
pub mod snapshot;
pub mod text;
pub mod toolbox;

pub use config::ToolConfig;
pub use error::ToolError;
pub use runner::{Interpreter, MockRuns, RunRecord, RunnerMode};
pub use sandbox::Sandbox;
pub use snapshot::Snapshot;
pub use text::truncate_log;
pub use toolbox::{ToolOutput, ToolResult, Toolkit};
