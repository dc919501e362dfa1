use std::fmt;
use std::path::PathBuf;

use repro_core::files;
use repro_core::llm::ToolSpec;
use repro_toolkit::toolbox::names::*;
use repro_toolkit::Toolkit;
use serde::{Deserialize, Serialize};

use crate::prompts::Prompts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Setup,
    Execution,
    Scoring,
    Report,
}

const SHARED: [&str; 4] = [READ_FILE, WRITE_FILE, INSPECT_DIR, RUN_BASH];

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [
        AgentKind::Setup,
        AgentKind::Execution,
        AgentKind::Scoring,
        AgentKind::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Setup => "setup",
            AgentKind::Execution => "execution",
            AgentKind::Scoring => "scoring",
            AgentKind::Report => "report",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == name)
    }

    /// Tool names available to the agent: the shared file, directory and
    /// bash tools followed by its own.
    pub fn toolset(self) -> Vec<&'static str> {
        let own: &[&str] = match self {
            AgentKind::Setup => &[INSTALL_DEPS],
            AgentKind::Execution => &[RUN_SCRIPT, EDIT_COPY, READ_FILE_PAGINATED],
            AgentKind::Scoring => &[EXTRACT_ELEMENTS, VIEW_IMAGE, CONVERT_TO_IMAGE, READ_FILE_PAGINATED],
            AgentKind::Report => &[RENDER_REPORT_PDF],
        };
        SHARED.iter().chain(own).copied().collect()
    }

    pub fn default_max_iterations(self) -> usize {
        match self {
            AgentKind::Setup => 30,
            AgentKind::Execution => 60,
            AgentKind::Scoring => 30,
            AgentKind::Report => 15,
        }
    }

    /// Workspace-relative file the agent must leave behind.
    pub fn deliverable(self) -> &'static str {
        match self {
            AgentKind::Setup => files::PLAN,
            AgentKind::Execution => files::EXECUTION_SUMMARY,
            AgentKind::Scoring => files::SCORING_SUMMARY,
            AgentKind::Report => files::REPORT_JSON,
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct AgentProfile {
    pub kind: AgentKind,
    pub system_prompt: String,
    pub tools: Vec<ToolSpec>,
    pub max_iterations: usize,
    pub deliverable_path: PathBuf,
}

impl AgentProfile {
    pub fn new(kind: AgentKind, prompts: &Prompts) -> Self {
        Self {
            kind,
            system_prompt: prompts.system_prompt(kind),
            tools: Toolkit::specs(&kind.toolset()),
            max_iterations: kind.default_max_iterations(),
            deliverable_path: PathBuf::from(kind.deliverable()),
        }
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations.max(1);
        self
    }

    pub fn allows(&self, tool: &str) -> bool {
        self.tools.iter().any(|t| t.name == tool)
    }
}
