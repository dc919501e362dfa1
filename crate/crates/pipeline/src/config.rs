use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use repro_core::files;
use repro_core::json::to_canonical_string;
use repro_core::llm::ModelConfig;
use repro_toolkit::ToolConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::profile::AgentKind;
use crate::score_file::ScoreFormat;

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_secs())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_secs)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Run the report agent after scoring.
    pub report_stage: bool,
    /// Wall-clock cap for the whole run.
    #[serde(with = "secs")]
    pub global_timeout: Duration,
    /// Per-agent iteration caps; missing agents use their defaults.
    pub max_iterations: BTreeMap<AgentKind, usize>,
    /// Per-agent context windows; missing agents use the model's.
    pub context_tokens: BTreeMap<AgentKind, u64>,
    /// Turns granted to fix a deliverable that fails validation.
    pub repair_turns: usize,
    /// Distinct files the scoring agent may open while looking for evidence.
    pub reconstruction_file_cap: usize,
    pub retry_attempts: u32,
    /// First backoff delay after a transport error; doubles per attempt.
    pub retry_base_delay_ms: u64,
    pub score_file: ScoreFormat,
    pub prompt_dir: Option<PathBuf>,
    pub tools: ToolConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            report_stage: false,
            global_timeout: Duration::from_secs(60 * 60),
            max_iterations: BTreeMap::new(),
            context_tokens: BTreeMap::new(),
            repair_turns: 2,
            reconstruction_file_cap: 40,
            retry_attempts: 3,
            retry_base_delay_ms: 500,
            score_file: ScoreFormat::default(),
            prompt_dir: None,
            tools: ToolConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn max_iterations(&self, kind: AgentKind) -> usize {
        self.max_iterations
            .get(&kind)
            .copied()
            .unwrap_or_else(|| kind.default_max_iterations())
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.score_file.name.is_empty() || self.score_file.name.contains('/') {
            return Err(format!(
                "score file name {:?} must be a bare file name",
                self.score_file.name
            ));
        }
        let taken = [
            files::PLAN,
            files::EXECUTION_SUMMARY,
            files::SCORING_SUMMARY,
            files::REPORT_JSON,
            files::REPORT_MD,
            files::REPORT_PDF,
            files::MANIFEST,
        ];
        let name = self.score_file.name.as_str();
        // report.json is free when the report stage is off.
        if taken.contains(&name) && (name != files::REPORT_JSON || self.report_stage) {
            return Err(format!("score file name {name:?} collides with a deliverable"));
        }
        if let Some((kind, _)) = self.max_iterations.iter().find(|(_, n)| **n == 0) {
            return Err(format!("max_iterations for {kind} must be positive"));
        }
        Ok(())
    }

    /// Stable hash of everything that shapes a run.
    pub fn hash(&self, model: &ModelConfig) -> String {
        let body = to_canonical_string(&(self, model)).expect("config serializes");
        hex::encode(Sha256::digest(body.as_bytes()))
    }
}
