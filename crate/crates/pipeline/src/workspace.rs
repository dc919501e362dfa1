//! Per-run workspace: a fresh directory holding logs, extracted elements,
//! artifacts, transcripts, the deliverables and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use repro_core::files;
use repro_core::json::write_canonical;
use repro_toolkit::snapshot::Intrusion;
use repro_toolkit::toolbox::layout;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;

pub const TRANSCRIPTS: &str = "transcripts";

#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    /// Creates the workspace and its subdirectories. An existing directory
    /// is accepted only when empty, so runs never share state.
    pub fn create(root: &Path) -> Result<Self, PipelineError> {
        if root.exists() {
            let mut entries = fs::read_dir(root).map_err(|e| PipelineError::workspace(root, e))?;
            if entries.next().is_some() {
                return Err(PipelineError::WorkspaceNotEmpty(root.to_path_buf()));
            }
        }
        for sub in [layout::ELEMENTS, layout::LOGS, layout::ARTIFACTS, TRANSCRIPTS] {
            fs::create_dir_all(root.join(sub)).map_err(|e| PipelineError::workspace(root, e))?;
        }
        let root = root.canonicalize().map_err(|e| PipelineError::workspace(root, e))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.root.join(file)
    }

    pub fn transcript(&self, agent: &str) -> PathBuf {
        self.root.join(TRANSCRIPTS).join(format!("{agent}.jsonl"))
    }

    pub fn write_manifest(&self, manifest: &RunManifest) -> std::io::Result<()> {
        write_canonical(&self.path(files::MANIFEST), manifest)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub status: String,
    pub iterations_used: usize,
    pub repairs: usize,
    pub stop: String,
    pub cost_usd: Decimal,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

/// Run metadata, written before the first agent starts and completed when
/// the run ends.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub paper_path: PathBuf,
    pub package_root: PathBuf,
    pub workspace_root: PathBuf,
    pub items: Vec<String>,
    pub budget_usd: Decimal,
    pub model_id: String,
    pub started_at: String,
    pub config_hash: String,
    pub report_stage: bool,
    pub mock_runner: bool,
    pub package_digest_before: String,

    #[serde(default)]
    pub finished: bool,
    #[serde(default)]
    pub finished_at: Option<String>,
    #[serde(default)]
    pub score: Option<u8>,
    /// Set when the score came from the emergency path.
    #[serde(default)]
    pub assessment_incomplete: bool,
    #[serde(default)]
    pub emergency_reason: Option<String>,
    /// Set when the score was raised to 4 by the exact-match rule.
    #[serde(default)]
    pub score_clamped: bool,
    #[serde(default)]
    pub stages: BTreeMap<String, StageRecord>,
    /// Deliverables written by the harness because an agent did not.
    #[serde(default)]
    pub fallbacks: Vec<String>,
    #[serde(default)]
    pub total_cost_usd: Decimal,
    #[serde(default)]
    pub score_file: Option<PathBuf>,
    #[serde(default)]
    pub package_digest_after: Option<String>,
    #[serde(default)]
    pub intrusions: Vec<Intrusion>,
}
