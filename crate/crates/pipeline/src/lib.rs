//! Runs an assessment: setup, execution and scoring agents (plus an
//! optional report agent) handing off through files in a fresh workspace.

pub mod agent;
pub mod assess;
pub mod config;
pub mod error;
pub mod profile;
pub mod prompts;
pub mod score_file;
pub mod workspace;

pub use agent::{run_agent, AgentEnv, AgentOutcome, AgentStatus, Deliverable, StopReason};
pub use assess::{Assessor, Models, RunResult};
pub use config::PipelineConfig;
pub use error::PipelineError;
pub use profile::{AgentKind, AgentProfile};
pub use prompts::Prompts;
pub use score_file::{emit_score_file, read_score_file, ScoreFormat};
pub use workspace::{RunManifest, Workspace};
