//! The bounded tool-use loop shared by all four agents.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use repro_core::deliverables::DeliverableFile;
use repro_core::llm::{ChatBackend, ChatClient, ChatMessage, LlmError, ModelConfig, RetryPolicy, ToolCall};
use repro_core::validate::{self, Violation, ViolationKind};
use repro_core::{files, AssessmentInput, CostLedger, ExecutionSummary, Report, ReproductionPlan, ScoringSummary};
use repro_toolkit::toolbox::names;
use repro_toolkit::Toolkit;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tracing::{debug, info, warn};

use crate::profile::{AgentKind, AgentProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentStatus {
    Delivered,
    DeliveredAfterRepair,
    Failed,
}

impl AgentStatus {
    pub fn is_delivered(self) -> bool {
        self != AgentStatus::Failed
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgentStatus::Delivered => "delivered",
            AgentStatus::DeliveredAfterRepair => "delivered_after_repair",
            AgentStatus::Failed => "failed",
        }
    }
}

impl fmt::Display for AgentStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why the loop ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StopReason {
    Completed,
    MaxIterations,
    RepairsExhausted,
    BudgetExceeded,
    Timeout,
    ModelError(String),
}

impl StopReason {
    /// Conditions that end the whole run, not just this agent.
    pub fn aborts_run(&self) -> bool {
        matches!(self, StopReason::BudgetExceeded | StopReason::Timeout)
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::Completed => f.write_str("completed"),
            StopReason::MaxIterations => f.write_str("max_iterations"),
            StopReason::RepairsExhausted => f.write_str("repairs_exhausted"),
            StopReason::BudgetExceeded => f.write_str("budget_exceeded"),
            StopReason::Timeout => f.write_str("timeout"),
            StopReason::ModelError(e) => write!(f, "model_error: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Deliverable {
    Plan(ReproductionPlan),
    Execution(ExecutionSummary),
    Scoring(ScoringSummary),
    Report(Report),
}

#[derive(Debug, Clone)]
pub struct AgentOutcome {
    pub agent: AgentKind,
    pub status: AgentStatus,
    pub deliverable: Option<Deliverable>,
    pub transcript_path: PathBuf,
    pub iterations_used: usize,
    pub repairs: usize,
    pub stop: StopReason,
    pub diagnostics: Vec<String>,
}

/// Everything an agent needs besides its profile and task.
pub struct AgentEnv<'a> {
    pub backend: &'a dyn ChatBackend,
    pub model: &'a ModelConfig,
    pub retry: RetryPolicy,
    pub toolkit: &'a Toolkit,
    pub input: &'a AssessmentInput,
    pub budget: Decimal,
    pub deadline: Option<Instant>,
    pub repair_turns: usize,
    /// Cap on distinct files the agent may open with read and image tools.
    pub file_cap: Option<usize>,
    pub transcript_path: PathBuf,
}

impl AgentEnv<'_> {
    fn workspace(&self) -> &Path {
        self.toolkit.sandbox.workspace_root()
    }

    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

const FILE_TOOLS: [&str; 4] = [
    names::READ_FILE,
    names::READ_FILE_PAGINATED,
    names::CONVERT_TO_IMAGE,
    names::VIEW_IMAGE,
];

/// Loads and validates the agent's deliverable from the workspace.
pub fn check_deliverable(
    kind: AgentKind,
    workspace: &Path,
    input: &AssessmentInput,
) -> Result<Deliverable, Vec<Violation>> {
    let path = workspace.join(kind.deliverable());
    if !path.is_file() {
        return Err(vec![Violation::new(
            ViolationKind::Malformed,
            None,
            format!("{} has not been written", path.display()),
        )]);
    }
    fn finish<T>(
        value: T,
        violations: Vec<Violation>,
        wrap: fn(T) -> Deliverable,
    ) -> Result<Deliverable, Vec<Violation>> {
        if violations.is_empty() {
            Ok(wrap(value))
        } else {
            Err(violations)
        }
    }
    match kind {
        AgentKind::Setup => {
            let plan: ReproductionPlan = validate::load(&path)?;
            let v = validate::validate_plan(&plan, input);
            finish(plan, v, Deliverable::Plan)
        }
        AgentKind::Execution => {
            let summary: ExecutionSummary = validate::load(&path)?;
            let v = validate::validate_execution_summary(&summary, input);
            finish(summary, v, Deliverable::Execution)
        }
        AgentKind::Scoring => {
            let summary: ScoringSummary = validate::load(&path)?;
            let v = validate::validate_scoring_summary(&summary, input);
            finish(summary, v, Deliverable::Scoring)
        }
        AgentKind::Report => {
            let report: Report = validate::load(&path)?;
            let scoring = ScoringSummary::read_from(&workspace.join(files::SCORING_SUMMARY)).ok();
            let v = validate::validate_report(&report, input, scoring.as_ref());
            finish(report, v, Deliverable::Report)
        }
    }
}

fn repair_prompt(path: &Path, violations: &[Violation], left: usize) -> String {
    let mut text = format!("The deliverable {} does not pass validation:\n", path.display());
    for v in violations {
        text.push_str(&format!("- {v}\n"));
    }
    text.push_str(&format!(
        "Fix these problems, write the file again, then reply without a tool call. {left} repair turn(s) remain."
    ));
    text
}

fn arg_path(call: &ToolCall) -> Option<PathBuf> {
    call.arguments.get("path").and_then(Value::as_str).map(PathBuf::from)
}

struct Loop<'a, 'b> {
    profile: &'a AgentProfile,
    env: &'a AgentEnv<'b>,
    opened: BTreeSet<PathBuf>,
    diagnostics: Vec<String>,
}

impl Loop<'_, '_> {
    /// Rejection text when the call is refused before reaching the toolkit.
    fn refuse(&mut self, call: &ToolCall) -> Option<String> {
        if !self.profile.allows(&call.name) {
            return Some(format!(
                "tool `{}` is not available to the {} agent",
                call.name, self.profile.kind
            ));
        }
        if let (Some(cap), true) = (self.env.file_cap, FILE_TOOLS.contains(&call.name.as_str())) {
            if let Some(path) = arg_path(call) {
                let resolved = self.env.toolkit.sandbox.resolve(&path);
                if !self.opened.contains(&resolved) {
                    if self.opened.len() >= cap {
                        return Some(format!(
                            "file cap of {cap} reached; assess with the evidence already gathered"
                        ));
                    }
                    self.opened.insert(resolved);
                }
            }
        }
        None
    }

    /// Shrinks runner timeouts so no tool outlives the run deadline.
    fn clamp_timeout(&self, call: &mut ToolCall) {
        let Some(deadline) = self.env.deadline else { return };
        let config = &self.env.toolkit.config;
        let default = match call.name.as_str() {
            names::RUN_SCRIPT => config.script_timeout,
            names::RUN_BASH => config.bash_timeout,
            _ => return,
        };
        let left = deadline.saturating_duration_since(Instant::now()).as_secs().max(1);
        let asked = call
            .arguments
            .get("timeout_s")
            .and_then(Value::as_u64)
            .unwrap_or(default.as_secs());
        if asked > left {
            if let Value::Object(map) = &mut call.arguments {
                map.insert("timeout_s".into(), Value::from(left));
            }
        }
    }
}

fn persist_transcript(path: &Path, history: &[ChatMessage]) {
    let write = || -> std::io::Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for message in history {
            serde_json::to_writer(&mut out, &message.without_image_data())?;
            out.write_all(b"\n")?;
        }
        out.flush()
    };
    if let Err(e) = write() {
        warn!(path = %path.display(), error = %e, "could not persist transcript");
    }
}

/// Alternates model turns and tool calls until the agent reports
/// completion with a valid deliverable, or a bound is hit. Never errors:
/// every failure ends as `AgentStatus::Failed` with diagnostics.
pub fn run_agent(profile: &AgentProfile, task: &str, env: &AgentEnv<'_>, ledger: &mut CostLedger) -> AgentOutcome {
    let kind = profile.kind;
    let client = ChatClient::new(env.backend, env.model).with_retry(env.retry);
    let mut history = vec![ChatMessage::system(&profile.system_prompt), ChatMessage::user(task)];
    let mut state = Loop {
        profile,
        env,
        opened: BTreeSet::new(),
        diagnostics: Vec::new(),
    };
    let mut iterations = 0;
    let mut repairs = 0;
    let deliverable_path = env.workspace().join(&profile.deliverable_path);

    let stop = loop {
        if iterations >= profile.max_iterations {
            break StopReason::MaxIterations;
        }
        if env.expired() {
            break StopReason::Timeout;
        }
        let reply = match client.chat(&history, &profile.tools, ledger, env.budget, kind.as_str()) {
            Ok(reply) => reply,
            Err(LlmError::MalformedToolCall { message, reason }) => {
                iterations += 1;
                let name = message.tool_call.as_ref().map(|c| c.name.clone()).unwrap_or_default();
                debug!(agent = %kind, tool = %name, %reason, "rejected tool call");
                state.diagnostics.push(format!("rejected call to `{name}`: {reason}"));
                history.push(ChatMessage::assistant(format!("[rejected tool call `{name}`]")));
                history.push(ChatMessage::user(format!(
                    "Your call to `{name}` was not executed: {reason}. Make one valid call to one of: {}.",
                    kind.toolset().join(", ")
                )));
                continue;
            }
            Err(LlmError::BudgetExceeded { spent, budget, .. }) => {
                state
                    .diagnostics
                    .push(format!("budget exhausted: spent {spent} of {budget} USD"));
                break StopReason::BudgetExceeded;
            }
            Err(e) => {
                state.diagnostics.push(e.to_string());
                break StopReason::ModelError(e.to_string());
            }
        };
        iterations += 1;

        let Some(mut call) = reply.tool_call.clone() else {
            history.push(reply);
            match check_deliverable(kind, env.workspace(), env.input) {
                Ok(_) => break StopReason::Completed,
                Err(violations) => {
                    if repairs >= env.repair_turns {
                        state.diagnostics.extend(violations.iter().map(|v| v.to_string()));
                        break StopReason::RepairsExhausted;
                    }
                    repairs += 1;
                    history.push(ChatMessage::user(repair_prompt(
                        &deliverable_path,
                        &violations,
                        env.repair_turns - repairs,
                    )));
                    continue;
                }
            }
        };

        if let Some(reason) = state.refuse(&call) {
            state
                .diagnostics
                .push(format!("rejected call to `{}`: {reason}", call.name));
            history.push(ChatMessage::assistant(format!("[rejected tool call `{}`]", call.name)));
            history.push(ChatMessage::user(format!(
                "Your call to `{}` was not executed: {reason}.",
                call.name
            )));
            continue;
        }
        state.clamp_timeout(&mut call);
        let mut turn = ChatMessage::assistant_tool_call(call.clone());
        turn.content = reply.content;
        history.push(turn);
        let output = env.toolkit.call(&call.name, &call.arguments);
        let images = if env.model.multimodal {
            output.images
        } else {
            Vec::new()
        };
        history.push(ChatMessage::tool_result(&call.id, output.result.render()).with_images(images));
    };

    let checked = check_deliverable(kind, env.workspace(), env.input);
    let (status, deliverable) = match checked {
        Ok(d) if repairs > 0 => (AgentStatus::DeliveredAfterRepair, Some(d)),
        Ok(d) => (AgentStatus::Delivered, Some(d)),
        Err(violations) => {
            if stop != StopReason::RepairsExhausted {
                state.diagnostics.extend(violations.iter().map(|v| v.to_string()));
            }
            (AgentStatus::Failed, None)
        }
    };
    persist_transcript(&env.transcript_path, &history);
    info!(agent = %kind, %status, iterations, %stop, "agent finished");
    AgentOutcome {
        agent: kind,
        status,
        deliverable,
        transcript_path: env.transcript_path.clone(),
        iterations_used: iterations,
        repairs,
        stop,
        diagnostics: state.diagnostics,
    }
}
