//! Stage sequencing: setup, execution, scoring and the optional report,
//! each fed only with the files earlier stages persisted.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use repro_core::deliverables::DeliverableFile;
use repro_core::llm::{ChatBackend, ModelConfig, RetryPolicy, ScriptedBackend};
use repro_core::{
    files, AssessmentInput, Clock, CodeQuality, CostLedger, ExecutionSummary, Report, ReproductionPlan, Score,
    ScoringSummary, SystemClock,
};
use repro_toolkit::snapshot::{Intrusion, Snapshot};
use repro_toolkit::{RunnerMode, Sandbox, Toolkit};
use tracing::{info, warn};

use crate::agent::{run_agent, AgentEnv, AgentOutcome, AgentStatus, Deliverable};
use crate::config::PipelineConfig;
use crate::error::PipelineError;
use crate::profile::{AgentKind, AgentProfile};
use crate::prompts::Prompts;
use crate::score_file::emit_score_file;
use crate::workspace::{RunManifest, StageRecord, Workspace};

/// The model configuration plus one chat backend per agent.
#[derive(Clone)]
pub struct Models {
    pub model: ModelConfig,
    default: Arc<dyn ChatBackend>,
    per_agent: BTreeMap<AgentKind, Arc<dyn ChatBackend>>,
}

impl Models {
    pub fn new(model: ModelConfig, backend: Arc<dyn ChatBackend>) -> Self {
        Self {
            model,
            default: backend,
            per_agent: BTreeMap::new(),
        }
    }

    pub fn with_agent(mut self, kind: AgentKind, backend: Arc<dyn ChatBackend>) -> Self {
        self.per_agent.insert(kind, backend);
        self
    }

    /// Replays `<dir>/<agent>.json` for each agent. Agents without a file
    /// get an empty script and fail on their first turn.
    pub fn scripted(model: ModelConfig, dir: &Path, vars: &[(&str, &str)]) -> Result<Self, String> {
        let mut models = Self::new(model, Arc::new(ScriptedBackend::new(Vec::new())));
        for kind in AgentKind::ALL {
            let path = dir.join(format!("{}.json", kind.as_str()));
            if path.is_file() {
                models = models.with_agent(kind, Arc::new(ScriptedBackend::from_file(&path, vars)?));
            }
        }
        Ok(models)
    }

    pub fn backend(&self, kind: AgentKind) -> &dyn ChatBackend {
        self.per_agent.get(&kind).unwrap_or(&self.default).as_ref()
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub score: Score,
    pub assessment_incomplete: bool,
    pub emergency_reason: Option<String>,
    pub score_clamped: bool,
    pub workspace: PathBuf,
    pub score_file: PathBuf,
    pub deliverable_paths: Vec<PathBuf>,
    pub ledger: CostLedger,
    pub outcomes: Vec<AgentOutcome>,
    pub wall_time: Duration,
    pub intrusions: Vec<Intrusion>,
}

impl RunResult {
    pub fn stage_statuses(&self) -> BTreeMap<AgentKind, AgentStatus> {
        self.outcomes.iter().map(|o| (o.agent, o.status)).collect()
    }

    pub fn outcome(&self, kind: AgentKind) -> Option<&AgentOutcome> {
        self.outcomes.iter().find(|o| o.agent == kind)
    }
}

pub struct Assessor {
    pub config: PipelineConfig,
    pub models: Models,
    prompts: Prompts,
    clock: Arc<dyn Clock>,
    runner: RunnerMode,
}

impl Assessor {
    pub fn new(config: PipelineConfig, models: Models) -> Result<Self, PipelineError> {
        config.validate().map_err(PipelineError::Config)?;
        models.model.validate().map_err(PipelineError::Config)?;
        let prompts = match &config.prompt_dir {
            Some(dir) => Prompts::with_overrides(dir)
                .map_err(|e| PipelineError::Config(format!("prompt dir {}: {e}", dir.display())))?,
            None => Prompts::builtin(),
        };
        Ok(Self {
            config,
            models,
            prompts,
            clock: Arc::new(SystemClock),
            runner: RunnerMode::Real,
        })
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_runner(mut self, runner: RunnerMode) -> Self {
        self.runner = runner;
        self
    }

    pub fn with_prompts(mut self, prompts: Prompts) -> Self {
        self.prompts = prompts;
        self
    }

    /// Runs one assessment. Errors only when the run cannot start (bad
    /// input, used workspace, bad config); afterwards every failure is
    /// absorbed and a score file is always written.
    pub fn assess(&self, input: &AssessmentInput) -> Result<RunResult, PipelineError> {
        input.validate()?;
        let started = Instant::now();
        let canonical = |p: &Path| p.canonicalize().map_err(|e| PipelineError::workspace(p, e));
        let package_root = canonical(&input.package_root)?;
        let paper_path = canonical(&input.paper_path)?;
        let before = Snapshot::capture(&package_root).map_err(|e| PipelineError::workspace(&package_root, e))?;
        let ws = Workspace::create(&input.workspace_root)?;
        let input = AssessmentInput {
            paper_path,
            package_root,
            items: input.items.clone(),
            budget_usd: input.budget_usd,
            workspace_root: ws.root().to_path_buf(),
        };

        let sandbox = Sandbox::new(&input.package_root, ws.root()).allow_read(&input.paper_path);
        let toolkit = Toolkit::new(sandbox, self.config.tools.clone())
            .map_err(|e| PipelineError::Config(e.to_string()))?
            .with_runner(self.runner.clone())
            .with_multimodal(self.models.model.multimodal);

        let manifest = RunManifest {
            paper_path: input.paper_path.clone(),
            package_root: input.package_root.clone(),
            workspace_root: ws.root().to_path_buf(),
            items: input.item_names().map(str::to_string).collect(),
            budget_usd: input.budget_usd,
            model_id: self.models.model.model_id.clone(),
            started_at: self.clock.now_rfc3339(),
            config_hash: self.config.hash(&self.models.model),
            report_stage: self.config.report_stage,
            mock_runner: matches!(self.runner, RunnerMode::Mock(_)),
            package_digest_before: before.digest(),
            ..RunManifest::default()
        };
        ws.write_manifest(&manifest)
            .map_err(|e| PipelineError::workspace(ws.root(), e))?;

        let mut run = Run {
            assessor: self,
            input: &input,
            ws: &ws,
            toolkit: &toolkit,
            deadline: started + self.config.global_timeout,
            ledger: CostLedger::new(),
            outcomes: Vec::new(),
            abort: None,
            manifest,
        };
        let (score, clamped) = run.stages();

        let score_file = match emit_score_file(score, ws.root(), &self.config.score_file) {
            Ok(path) => path,
            Err(e) => {
                warn!(error = %e, "could not write the score file");
                ws.path(&self.config.score_file.name)
            }
        };
        let after = Snapshot::capture(&input.package_root).unwrap_or_default();
        let intrusions = before.intrusions(&after, &self.config.tools.output_dirs);
        if !intrusions.is_empty() {
            warn!(
                count = intrusions.len(),
                "package files changed outside the allowed paths"
            );
        }

        let scoring = ScoringSummary::read_from(&ws.path(files::SCORING_SUMMARY)).ok();
        let assessment_incomplete = scoring.as_ref().is_none_or(|s| s.assessment_incomplete);
        let mut manifest = run.manifest;
        manifest.finished = true;
        manifest.finished_at = Some(self.clock.now_rfc3339());
        manifest.score = Some(score.get());
        manifest.assessment_incomplete = assessment_incomplete;
        manifest.score_clamped = clamped;
        manifest.total_cost_usd = run.ledger.total();
        manifest.score_file = Some(score_file.clone());
        manifest.package_digest_after = Some(after.digest());
        manifest.intrusions = intrusions.clone();
        for outcome in &run.outcomes {
            manifest.stages.insert(
                outcome.agent.as_str().into(),
                StageRecord {
                    status: outcome.status.as_str().into(),
                    iterations_used: outcome.iterations_used,
                    repairs: outcome.repairs,
                    stop: outcome.stop.to_string(),
                    cost_usd: run.ledger.total_for_agent(outcome.agent.as_str()),
                    diagnostics: outcome.diagnostics.clone(),
                },
            );
        }
        if let Err(e) = ws.write_manifest(&manifest) {
            warn!(error = %e, "could not update the run manifest");
        }

        let mut deliverable_paths: Vec<PathBuf> = [files::PLAN, files::EXECUTION_SUMMARY, files::SCORING_SUMMARY]
            .iter()
            .map(|f| ws.path(f))
            .collect();
        if self.config.report_stage {
            deliverable_paths.extend(
                [files::REPORT_JSON, files::REPORT_MD, files::REPORT_PDF]
                    .iter()
                    .map(|f| ws.path(f)),
            );
        }
        deliverable_paths.push(score_file.clone());
        deliverable_paths.push(ws.path(files::MANIFEST));

        info!(score = score.get(), assessment_incomplete, cost = %run.ledger.total(), "assessment finished");
        Ok(RunResult {
            score,
            assessment_incomplete,
            emergency_reason: manifest.emergency_reason,
            score_clamped: clamped,
            workspace: ws.root().to_path_buf(),
            score_file,
            deliverable_paths,
            ledger: run.ledger,
            outcomes: run.outcomes,
            wall_time: started.elapsed(),
            intrusions,
        })
    }
}

/// Mutable state of one run.
struct Run<'a> {
    assessor: &'a Assessor,
    input: &'a AssessmentInput,
    ws: &'a Workspace,
    toolkit: &'a Toolkit,
    deadline: Instant,
    ledger: CostLedger,
    outcomes: Vec<AgentOutcome>,
    /// Set once the budget or the global timeout ends the run.
    abort: Option<String>,
    manifest: RunManifest,
}

impl Run<'_> {
    fn names(&self) -> Vec<&str> {
        self.input.item_names().collect()
    }

    fn items_block(&self) -> String {
        let mut out = String::new();
        for item in &self.input.items {
            match &item.description {
                Some(d) => out.push_str(&format!("- {}: {d}\n", item.name)),
                None => out.push_str(&format!("- {}\n", item.name)),
            }
        }
        out
    }

    fn header(&self) -> String {
        format!(
            "Paper: {}\nPackage root: {}\nWorkspace: {}\nReproduction items:\n{}",
            self.input.paper_path.display(),
            self.input.package_root.display(),
            self.ws.root().display(),
            self.items_block()
        )
    }

    fn status_line(&self) -> String {
        self.outcomes
            .iter()
            .map(|o| format!("{} {} ({})", o.agent, o.status, o.stop))
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Runs one agent unless the run has been aborted.
    fn agent(&mut self, kind: AgentKind, task: String) -> Option<AgentOutcome> {
        if self.abort.is_some() {
            return None;
        }
        let config = &self.assessor.config;
        let mut model = self.assessor.models.model.clone();
        if let Some(tokens) = config.context_tokens.get(&kind) {
            model.max_context_tokens = *tokens;
        }
        let profile = AgentProfile::new(kind, &self.assessor.prompts).with_max_iterations(config.max_iterations(kind));
        let env = AgentEnv {
            backend: self.assessor.models.backend(kind),
            model: &model,
            retry: RetryPolicy {
                attempts: config.retry_attempts,
                base_delay: Duration::from_millis(config.retry_base_delay_ms),
            },
            toolkit: self.toolkit,
            input: self.input,
            budget: self.input.budget_usd,
            deadline: Some(self.deadline),
            repair_turns: config.repair_turns,
            file_cap: (kind == AgentKind::Scoring).then_some(config.reconstruction_file_cap),
            transcript_path: self.ws.transcript(kind.as_str()),
        };
        let outcome = run_agent(&profile, &task, &env, &mut self.ledger);
        if outcome.stop.aborts_run() {
            let reason = match outcome.stop {
                crate::agent::StopReason::Timeout => "global timeout",
                _ => "budget exhausted",
            };
            self.abort = Some(format!("{reason} during the {kind} stage"));
        }
        self.outcomes.push(outcome.clone());
        Some(outcome)
    }

    fn failure_text(&self, kind: AgentKind, outcome: Option<&AgentOutcome>) -> String {
        match outcome {
            None => format!(
                "the {kind} stage was skipped: {}",
                self.abort.as_deref().unwrap_or("run aborted")
            ),
            Some(o) => {
                let mut text = format!("the {kind} agent stopped ({})", o.stop);
                if !o.diagnostics.is_empty() {
                    let tail: Vec<&str> = o.diagnostics.iter().rev().take(3).rev().map(String::as_str).collect();
                    text.push_str(&format!("; last diagnostics: {}", tail.join(" | ")));
                }
                text
            }
        }
    }

    /// Moves an invalid deliverable aside and writes the harness fallback.
    fn write_fallback<T: DeliverableFile>(&mut self, file: &str, value: &T) {
        let path = self.ws.path(file);
        if path.exists() {
            let rejected = path.with_extension("rejected.json");
            if let Err(e) = std::fs::rename(&path, &rejected) {
                warn!(error = %e, file, "could not move the invalid deliverable aside");
            }
        }
        if let Err(e) = value.write_to(&path) {
            warn!(error = %e, file, "could not write fallback deliverable");
        }
        self.manifest.fallbacks.push(file.to_string());
    }

    fn read_text(&self, file: &str) -> String {
        std::fs::read_to_string(self.ws.path(file)).unwrap_or_default()
    }

    /// Runs all stages; returns the final score and whether it was clamped.
    fn stages(&mut self) -> (Score, bool) {
        let names: Vec<String> = self.names().iter().map(|s| s.to_string()).collect();
        let names_ref = || names.iter().map(String::as_str);

        // Setup.
        let task = format!(
            "{}\nWrite the plan to {}.\n",
            self.header(),
            self.ws.path(files::PLAN).display()
        );
        let setup = self.agent(AgentKind::Setup, task);
        let plan = match setup.as_ref().and_then(|o| o.deliverable.clone()) {
            Some(Deliverable::Plan(plan)) => plan,
            _ => {
                let reason = self.failure_text(AgentKind::Setup, setup.as_ref());
                let plan = ReproductionPlan::all_unplannable(names_ref(), &format!("setup stage failed: {reason}"));
                self.write_fallback(files::PLAN, &plan);
                plan
            }
        };
        let plan_note = if self.manifest.fallbacks.iter().any(|f| f == files::PLAN) {
            "The setup stage failed; the plan below is a placeholder. Find the entry points yourself.\n"
        } else {
            ""
        };

        // Execution.
        let task = format!(
            "{}\n{plan_note}Reproduction plan ({}):\n{}\n\nWrite the execution summary to {}.\n",
            self.header(),
            self.ws.path(files::PLAN).display(),
            self.read_text(files::PLAN),
            self.ws.path(files::EXECUTION_SUMMARY).display()
        );
        let execution = self.agent(AgentKind::Execution, task);
        let summary = match execution.as_ref().and_then(|o| o.deliverable.clone()) {
            Some(Deliverable::Execution(summary)) => summary,
            _ => {
                let reason = self.failure_text(AgentKind::Execution, execution.as_ref());
                let summary = ExecutionSummary::stage_failed(names_ref(), &reason);
                self.write_fallback(files::EXECUTION_SUMMARY, &summary);
                summary
            }
        };

        // Scoring sees deliverables only, never the execution transcript.
        let task = format!(
            "{}\nUpstream stages: {}\nReproduction plan: {}\nExecution summary ({}):\n{}\n\nWrite the scoring summary to {}.\n",
            self.header(),
            self.status_line(),
            self.ws.path(files::PLAN).display(),
            self.ws.path(files::EXECUTION_SUMMARY).display(),
            self.read_text(files::EXECUTION_SUMMARY),
            self.ws.path(files::SCORING_SUMMARY).display()
        );
        let scoring_outcome = self.agent(AgentKind::Scoring, task);
        let mut clamped = false;
        let scoring = match scoring_outcome.as_ref().and_then(|o| o.deliverable.clone()) {
            Some(Deliverable::Scoring(mut scoring)) => {
                if summary.code_quality_assessment == CodeQuality::NoErrors
                    && scoring.all_exact_match()
                    && scoring.score != Score::FULLY_REPRODUCIBLE
                {
                    info!(
                        from = scoring.score.get(),
                        "all items exact with clean code; clamping to 4"
                    );
                    scoring.score = Score::FULLY_REPRODUCIBLE;
                    clamped = true;
                    if let Err(e) = scoring.write_to(&self.ws.path(files::SCORING_SUMMARY)) {
                        warn!(error = %e, "could not rewrite the clamped scoring summary");
                    }
                }
                scoring
            }
            _ => {
                let reason = match &self.abort {
                    Some(abort) => abort.clone(),
                    None => self.failure_text(AgentKind::Scoring, scoring_outcome.as_ref()),
                };
                let outputs: usize = summary.items.values().filter(|i| !i.output_files.is_empty()).count();
                let evidence = format!(
                    "{reason}. Progress: {}; {outputs} of {} items had output files.",
                    if self.outcomes.is_empty() {
                        "no agent ran".to_string()
                    } else {
                        self.status_line()
                    },
                    names.len()
                );
                let scoring = ScoringSummary::emergency(names_ref(), &evidence);
                self.manifest.emergency_reason = Some(reason);
                self.write_fallback(files::SCORING_SUMMARY, &scoring);
                scoring
            }
        };

        if self.assessor.config.report_stage {
            self.report(&plan, &summary, &scoring);
        }
        (scoring.score, clamped)
    }

    fn report(&mut self, plan: &ReproductionPlan, summary: &ExecutionSummary, scoring: &ScoringSummary) {
        let md_path = self.ws.path(files::REPORT_MD);
        let pdf_path = self.ws.path(files::REPORT_PDF);
        let task = format!(
            "{}\nExecution summary ({}):\n{}\n\nScoring summary ({}):\n{}\n\nWrite {}, {} and {}.\n",
            self.header(),
            self.ws.path(files::EXECUTION_SUMMARY).display(),
            self.read_text(files::EXECUTION_SUMMARY),
            self.ws.path(files::SCORING_SUMMARY).display(),
            self.read_text(files::SCORING_SUMMARY),
            self.ws.path(files::REPORT_JSON).display(),
            md_path.display(),
            pdf_path.display()
        );
        let outcome = if scoring.assessment_incomplete {
            None
        } else {
            self.agent(AgentKind::Report, task)
        };
        let report = match outcome.as_ref().and_then(|o| o.deliverable.clone()) {
            Some(Deliverable::Report(report)) => report,
            _ => {
                let report = Report::from_summaries(
                    self.input.item_names(),
                    Some(plan),
                    summary,
                    scoring,
                    &self.assessor.clock.now_rfc3339(),
                );
                self.write_fallback(files::REPORT_JSON, &report);
                let _ = std::fs::remove_file(&md_path);
                let _ = std::fs::remove_file(&pdf_path);
                report
            }
        };
        if !md_path.is_file() {
            if let Err(e) = std::fs::write(&md_path, report.to_markdown()) {
                warn!(error = %e, "could not write report.md");
            }
        }
        if !pdf_path.is_file() {
            if let Err(e) = self.toolkit.render_report_pdf(&md_path, &pdf_path) {
                warn!(error = %e, "report PDF failed; keeping markdown and JSON");
                if let Some(o) = self.outcomes.iter_mut().find(|o| o.agent == AgentKind::Report) {
                    if o.status == AgentStatus::Delivered {
                        o.status = AgentStatus::DeliveredAfterRepair;
                    }
                    o.diagnostics.push(format!("report PDF failed: {e}"));
                }
            }
        }
    }
}
