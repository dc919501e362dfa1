mod common;

use std::fs;
use std::sync::Arc;
use std::time::Duration;

use common::*;
use repro_core::deliverables::DeliverableFile;
use repro_core::llm::{ChatMessage, ModelConfig, ScriptedBackend};
use repro_core::validate::{validate_execution_summary, validate_plan, validate_report, validate_scoring_summary};
use repro_core::{files, ExecutionSummary, FixedClock, Report, ReproductionPlan, Score, ScoringSummary};
use repro_pipeline::{
    read_score_file, AgentKind, AgentStatus, Assessor, Models, PipelineConfig, PipelineError, RunManifest, RunResult,
};
use rust_decimal::Decimal;
use serde_json::{json, Value};

struct Scripts {
    setup: Vec<ChatMessage>,
    execution: Vec<ChatMessage>,
    scoring: Vec<ChatMessage>,
    report: Vec<ChatMessage>,
}

fn models(s: Scripts) -> (Models, [Arc<ScriptedBackend>; 4]) {
    let backends = [
        scripted(s.setup),
        scripted(s.execution),
        scripted(s.scoring),
        scripted(s.report),
    ];
    let mut models = Models::new(ModelConfig::gpt4o_like(), scripted(vec![]));
    for (kind, b) in AgentKind::ALL.into_iter().zip(&backends) {
        models = models.with_agent(kind, b.clone());
    }
    (models, backends)
}

fn setup_script(fx: &Fixture) -> Vec<ChatMessage> {
    let v = fx.vars();
    vec![
        call("inspect_dir", json!({"path": v.pkg})),
        call("read_file", json!({"path": format!("{}/README.md", v.pkg)})),
        write(
            &fx.ws().join(files::PLAN),
            &json!({"Figure 1": {
                "related_files": [format!("{}/code/make_fig.py", v.pkg)],
                "execution_steps": [format!("Run {}/code/make_fig.py", v.pkg)],
            }}),
        ),
        text("Plan written."),
    ]
}

fn execution_script(fx: &Fixture, quality: &str) -> Vec<ChatMessage> {
    let v = fx.vars();
    vec![
        call(
            "run_script",
            json!({"script_path": format!("{}/code/make_fig.py", v.pkg)}),
        ),
        write(
            &fx.ws().join(files::EXECUTION_SUMMARY),
            &json!({
                "code_quality_assessment": quality,
                "reason": "The script matches the described procedure.",
                "Figure 1": {
                    "original_files": [format!("{}/code/make_fig.py", v.pkg)],
                    "modified_files": [],
                    "modifications": [],
                    "output_files": [format!("{}/output/fig1.csv", v.pkg)],
                }
            }),
        ),
        text("Execution finished."),
    ]
}

fn scoring_script(fx: &Fixture, score: u8, consistency: &str) -> Vec<ChatMessage> {
    let v = fx.vars();
    vec![
        call("extract_elements", json!({"pdf_path": v.paper})),
        call("view_image", json!({"path": format!("{}/elements/page_001.png", v.ws)})),
        call(
            "convert_to_image",
            json!({"path": format!("{}/output/fig1.csv", v.pkg)}),
        ),
        write(
            &fx.ws().join(files::SCORING_SUMMARY),
            &json!({
                "score": score,
                "Figure 1": {
                    "original_item": format!("{}/elements/page_001.png", v.ws),
                    "reproduced_outputs": [format!("{}/output/fig1.csv", v.pkg)],
                    "evaluation_summary": "Values agree with the paper.",
                    "consistency": consistency,
                }
            }),
        ),
        text("Scored."),
    ]
}

fn golden(fx: &Fixture) -> Scripts {
    Scripts {
        setup: setup_script(fx),
        execution: execution_script(fx, "no_errors"),
        scoring: scoring_script(fx, 4, "exact_match"),
        report: vec![],
    }
}

fn assessor(config: PipelineConfig, models: Models) -> Assessor {
    Assessor::new(config, models)
        .unwrap()
        .with_clock(Arc::new(FixedClock::from_unix(1_700_000_000)))
}

fn manifest(result: &RunResult) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(result.workspace.join(files::MANIFEST)).unwrap()).unwrap()
}

fn assert_all_valid(fx: &Fixture, result: &RunResult) {
    let mut input = fx.input.clone();
    input.workspace_root = result.workspace.clone();
    let ws = &result.workspace;
    let plan = ReproductionPlan::read_from(&ws.join(files::PLAN)).unwrap();
    assert_eq!(validate_plan(&plan, &input), vec![]);
    let exec = ExecutionSummary::read_from(&ws.join(files::EXECUTION_SUMMARY)).unwrap();
    assert_eq!(validate_execution_summary(&exec, &input), vec![]);
    let scoring = ScoringSummary::read_from(&ws.join(files::SCORING_SUMMARY)).unwrap();
    assert_eq!(validate_scoring_summary(&scoring, &input), vec![]);
    assert_eq!(scoring.score, result.score);
    assert_eq!(read_score_file(ws, &Default::default()), Ok(result.score));
    assert!(result.intrusions.is_empty(), "{:?}", result.intrusions);
}

#[test]
fn golden_pipeline_reproduces_one_figure() {
    let fx = fixture(&["Figure 1"]);
    let (models, backends) = models(golden(&fx));
    let result = assessor(PipelineConfig::default(), models).assess(&fx.input).unwrap();
    assert_eq!(result.score, Score::FULLY_REPRODUCIBLE);
    assert!(!result.assessment_incomplete);
    assert_all_valid(&fx, &result);
    for kind in [AgentKind::Setup, AgentKind::Execution, AgentKind::Scoring] {
        assert_eq!(result.stage_statuses()[&kind], AgentStatus::Delivered, "{kind}");
        assert!(result.workspace.join(format!("transcripts/{kind}.jsonl")).is_file());
    }
    assert!(
        result.outcome(AgentKind::Report).is_none(),
        "report stage is off by default"
    );
    assert!(backends.iter().all(|b| b.remaining() == 0));
    assert!(fx.pkg().join("output/fig1.csv").is_file());
    assert!(result.workspace.join("elements/page_001.png").is_file());
    assert!(result.workspace.join("logs/make_fig.1.log").is_file());
    let m = manifest(&result);
    assert!(m.finished);
    assert_eq!(m.score, Some(4));
    assert_eq!(m.package_digest_before.len(), 64);
    assert!(m.fallbacks.is_empty());
    assert_eq!(result.ledger.entries().len(), 12);
    assert_eq!(result.ledger.total(), result.ledger.recount());
    assert_eq!(m.total_cost_usd, result.ledger.total());
}

#[test]
fn setup_failure_leaves_discovery_to_execution() {
    let fx = fixture(&["Figure 1"]);
    let mut scripts = golden(&fx);
    scripts.setup = vec![text("I could not find anything.")];
    scripts
        .execution
        .insert(0, call("inspect_dir", json!({"path": fx.vars().pkg})));
    let (models, _) = models(scripts);
    let result = assessor(PipelineConfig::default(), models).assess(&fx.input).unwrap();
    assert_eq!(result.stage_statuses()[&AgentKind::Setup], AgentStatus::Failed);
    assert_eq!(result.stage_statuses()[&AgentKind::Execution], AgentStatus::Delivered);
    assert_eq!(result.score, Score::FULLY_REPRODUCIBLE);
    assert_all_valid(&fx, &result);
    let plan = ReproductionPlan::read_from(&result.workspace.join(files::PLAN)).unwrap();
    assert!(plan.items["Figure 1"]
        .unplannable
        .as_deref()
        .unwrap()
        .contains("setup stage failed"));
    assert_eq!(manifest(&result).fallbacks, [files::PLAN]);
    let exec_log = transcript(&result.workspace.join("transcripts/execution.jsonl"));
    assert!(exec_log[1]["content"].as_str().unwrap().contains("placeholder"));
}

#[test]
fn zero_budget_takes_the_emergency_path() {
    let fx = fixture(&["Figure 1"]);
    let mut input = fx.input.clone();
    input.budget_usd = Decimal::ZERO;
    let (models, backends) = models(golden(&fx));
    let result = assessor(PipelineConfig::default(), models).assess(&input).unwrap();
    assert_eq!(result.score, Score::IRREPRODUCIBLE);
    assert!(result.assessment_incomplete);
    assert_eq!(backends[0].remaining(), 4, "no model call was made");
    assert_eq!(result.ledger.entries().len(), 0);
    let m = manifest(&result);
    assert!(m.assessment_incomplete);
    assert!(m.emergency_reason.unwrap().contains("budget exhausted"));
    assert_eq!(m.stages["setup"].status, "failed");
    assert!(!m.stages.contains_key("execution"), "later stages are skipped");
    assert_all_valid(&fx, &result);
}

#[test]
fn budget_running_out_mid_run_still_scores() {
    let full = {
        let fx = fixture(&["Figure 1"]);
        let (models, _) = models(golden(&fx));
        assessor(PipelineConfig::default(), models)
            .assess(&fx.input)
            .unwrap()
            .ledger
            .total()
    };
    let fx = fixture(&["Figure 1"]);
    let mut input = fx.input.clone();
    // Enough for the first stage, not for the whole run.
    input.budget_usd = full / Decimal::new(2, 0);
    let (models, _) = models(golden(&fx));
    let result = assessor(PipelineConfig::default(), models).assess(&input).unwrap();
    assert_eq!(result.score, Score::IRREPRODUCIBLE);
    assert!(result.assessment_incomplete);
    assert!(result.ledger.total() <= input.budget_usd);
    assert!(result
        .emergency_reason
        .as_deref()
        .unwrap()
        .starts_with("budget exhausted during"));
    assert_all_valid(&fx, &result);
}

#[test]
fn global_timeout_takes_the_emergency_path() {
    let fx = fixture(&["Figure 1"]);
    let (models, _) = models(golden(&fx));
    let config = PipelineConfig {
        global_timeout: Duration::ZERO,
        ..PipelineConfig::default()
    };
    let result = assessor(config, models).assess(&fx.input).unwrap();
    assert_eq!(result.score, Score::IRREPRODUCIBLE);
    assert!(result.emergency_reason.as_deref().unwrap().contains("global timeout"));
    assert_all_valid(&fx, &result);
}

#[test]
fn empty_package_still_gets_a_valid_score() {
    let fx = fixture(&["Figure 1", "Table 2"]);
    fs::remove_dir_all(fx.pkg()).unwrap();
    fs::create_dir_all(fx.pkg()).unwrap();
    let (models, _) = models(Scripts {
        setup: vec![],
        execution: vec![],
        scoring: vec![],
        report: vec![],
    });
    let result = assessor(PipelineConfig::default(), models).assess(&fx.input).unwrap();
    assert_eq!(result.score, Score::IRREPRODUCIBLE);
    assert!(result.assessment_incomplete);
    assert_all_valid(&fx, &result);
    let scoring = ScoringSummary::read_from(&result.workspace.join(files::SCORING_SUMMARY)).unwrap();
    assert_eq!(scoring.items.len(), 2);
}

#[test]
fn exact_matches_with_clean_code_clamp_to_four() {
    let fx = fixture(&["Figure 1"]);
    let mut scripts = golden(&fx);
    scripts.scoring = scoring_script(&fx, 3, "exact_match");
    let (models, _) = models(scripts);
    let result = assessor(PipelineConfig::default(), models).assess(&fx.input).unwrap();
    assert_eq!(result.score, Score::FULLY_REPRODUCIBLE);
    assert!(result.score_clamped);
    assert!(manifest(&result).score_clamped);
    assert_all_valid(&fx, &result);
}

#[test]
fn minor_code_errors_are_not_clamped() {
    let fx = fixture(&["Figure 1"]);
    let mut scripts = golden(&fx);
    scripts.execution = execution_script(&fx, "minor_errors");
    scripts.scoring = scoring_script(&fx, 2, "exact_match");
    let (models, _) = models(scripts);
    let result = assessor(PipelineConfig::default(), models).assess(&fx.input).unwrap();
    assert_eq!(result.score, Score::CODE_ISSUES);
    assert!(!result.score_clamped);
}

#[test]
fn scoring_never_sees_execution_traces() {
    let fx = fixture(&["Figure 1"]);
    let (models, _) = models(golden(&fx));
    let result = assessor(PipelineConfig::default(), models).assess(&fx.input).unwrap();
    let exec = fs::read_to_string(result.workspace.join("transcripts/execution.jsonl")).unwrap();
    assert!(exec.contains("EXEC-ONLY-MARKER 7f3a"));
    let scoring = fs::read_to_string(result.workspace.join("transcripts/scoring.jsonl")).unwrap();
    assert!(!scoring.contains("EXEC-ONLY-MARKER"));
    assert!(
        scoring.contains("code_quality_assessment"),
        "the summary itself is passed on"
    );
}

#[test]
fn report_stage_falls_back_to_the_harness_template() {
    let fx = fixture(&["Figure 1"]);
    let (models, _) = models(golden(&fx));
    let config = PipelineConfig {
        report_stage: true,
        ..PipelineConfig::default()
    };
    let result = assessor(config, models).assess(&fx.input).unwrap();
    assert_eq!(result.stage_statuses()[&AgentKind::Report], AgentStatus::Failed);
    let ws = &result.workspace;
    let report = Report::read_from(&ws.join(files::REPORT_JSON)).unwrap();
    assert_eq!(report.overall_score, Score::FULLY_REPRODUCIBLE);
    let md = fs::read_to_string(ws.join(files::REPORT_MD)).unwrap();
    let order: Vec<usize> = [
        "## Overall Score",
        "## Scoring Criteria",
        "## Overall Explanation",
        "## Item-by-Item Analysis",
    ]
    .iter()
    .map(|h| md.find(h).unwrap())
    .collect();
    assert!(order.windows(2).all(|w| w[0] < w[1]));
    assert!(fs::read(ws.join(files::REPORT_PDF)).unwrap().starts_with(b"%PDF"));
    assert!(manifest(&result).fallbacks.contains(&files::REPORT_JSON.to_string()));
    assert_eq!(
        result.deliverable_paths.iter().filter(|p| p.exists()).count(),
        result.deliverable_paths.len()
    );
}

#[test]
fn report_agent_writes_its_own_report() {
    let fx = fixture(&["Figure 1"]);
    let mut scripts = golden(&fx);
    let ws = fx.ws();
    scripts.report = vec![
        call(
            "read_file",
            json!({"path": ws.join(files::SCORING_SUMMARY).display().to_string()}),
        ),
        write(
            &ws.join(files::REPORT_JSON),
            &json!({
                "overall_score": 4,
                "overall_explanation": "Reproduced.",
                "items": [{"name": "Figure 1", "outputs": ["fig1.csv"], "assessment": "Matches."}]
            }),
        ),
        call(
            "write_file",
            json!({"path": ws.join(files::REPORT_MD).display().to_string(), "content": "# Report\n\n## Overall Score\n\n4\n"}),
        ),
        call(
            "render_report_pdf",
            json!({"markdown_path": ws.join(files::REPORT_MD).display().to_string(), "out_pdf": ws.join(files::REPORT_PDF).display().to_string()}),
        ),
        text("Report done."),
    ];
    let (models, _) = models(scripts);
    let config = PipelineConfig {
        report_stage: true,
        ..PipelineConfig::default()
    };
    let result = assessor(config, models).assess(&fx.input).unwrap();
    assert_eq!(result.stage_statuses()[&AgentKind::Report], AgentStatus::Delivered);
    let report = Report::read_from(&result.workspace.join(files::REPORT_JSON)).unwrap();
    let scoring = ScoringSummary::read_from(&result.workspace.join(files::SCORING_SUMMARY)).unwrap();
    let mut input = fx.input.clone();
    input.workspace_root = result.workspace.clone();
    assert_eq!(validate_report(&report, &input, Some(&scoring)), vec![]);
    assert!(manifest(&result).fallbacks.is_empty());
}

#[test]
fn used_workspace_is_refused() {
    let fx = fixture(&["Figure 1"]);
    fs::create_dir_all(fx.ws()).unwrap();
    fs::write(fx.ws().join("old.txt"), "x").unwrap();
    let (models, _) = models(golden(&fx));
    let err = assessor(PipelineConfig::default(), models)
        .assess(&fx.input)
        .unwrap_err();
    assert!(matches!(err, PipelineError::WorkspaceNotEmpty(_)));
}

#[test]
fn identical_runs_produce_identical_deliverables() {
    let fx = fixture(&["Figure 1"]);
    let deliverables = [
        files::PLAN,
        files::EXECUTION_SUMMARY,
        files::SCORING_SUMMARY,
        "reproducibility_score.json",
    ];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let _ = fs::remove_dir_all(fx.ws());
        let _ = fs::remove_dir_all(fx.pkg().join("output"));
        let (models, _) = models(golden(&fx));
        let result = assessor(PipelineConfig::default(), models).assess(&fx.input).unwrap();
        runs.push(deliverables.map(|f| fs::read(result.workspace.join(f)).unwrap()));
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn scripted_models_load_from_a_directory() {
    let fx = fixture(&["Figure 1"]);
    let dir = fx.root.join("scripts");
    fs::create_dir_all(&dir).unwrap();
    let setup: Value = json!([
        {"tool_call": {"name": "inspect_dir", "arguments": {"path": "${PACKAGE}"}}},
        {"content": "giving up"}
    ]);
    fs::write(dir.join("setup.json"), setup.to_string()).unwrap();
    let v = fx.vars();
    let models = Models::scripted(
        ModelConfig::gpt4o_like(),
        &dir,
        &[("PACKAGE", &v.pkg), ("WORKSPACE", &v.ws), ("PAPER", &v.paper)],
    )
    .unwrap();
    let result = assessor(PipelineConfig::default(), models).assess(&fx.input).unwrap();
    assert_eq!(result.outcome(AgentKind::Setup).unwrap().iterations_used, 2);
    assert_eq!(result.score, Score::IRREPRODUCIBLE);
    let lines = transcript(&result.workspace.join("transcripts/setup.jsonl"));
    assert_eq!(lines[2]["tool_call"]["arguments"]["path"], v.pkg.as_str());
}

mod faults {
    use super::*;
    use proptest::prelude::*;
    use repro_core::llm::{BackendError, BackendReply, ChatBackend, ChatRequest};

    struct Down;

    impl ChatBackend for Down {
        fn complete(&self, _: ChatRequest<'_>) -> Result<BackendReply, BackendError> {
            Err(BackendError::Transport("connection reset".into()))
        }
    }

    #[derive(Debug, Clone, Copy)]
    enum Fault {
        None,
        Silent,
        Down,
        Garbage,
    }

    fn apply(fault: Fault, good: Vec<ChatMessage>) -> Arc<dyn ChatBackend> {
        match fault {
            Fault::None => scripted(good),
            Fault::Silent => scripted(vec![]),
            Fault::Down => Arc::new(Down),
            Fault::Garbage => scripted((0..4).map(|_| call("no_such_tool", json!({"x": 1}))).collect()),
        }
    }

    fn arb_fault() -> impl Strategy<Value = Fault> {
        prop_oneof![
            Just(Fault::None),
            Just(Fault::Silent),
            Just(Fault::Down),
            Just(Fault::Garbage)
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn every_faulty_run_emits_a_valid_score(
            faults in proptest::array::uniform3(arb_fault()),
            starve in any::<bool>(),
        ) {
            let fx = fixture(&["Figure 1"]);
            let s = golden(&fx);
            let models = Models::new(ModelConfig::gpt4o_like(), scripted(vec![]))
                .with_agent(AgentKind::Setup, apply(faults[0], s.setup))
                .with_agent(AgentKind::Execution, apply(faults[1], s.execution))
                .with_agent(AgentKind::Scoring, apply(faults[2], s.scoring));
            let mut input = fx.input.clone();
            if starve {
                input.budget_usd = Decimal::new(1, 2);
            }
            let config = PipelineConfig { retry_attempts: 2, retry_base_delay_ms: 0, ..PipelineConfig::default() };
            let result = assessor(config, models).assess(&input).unwrap();
            assert_all_valid(&fx, &result);
            let all_ok = faults.iter().all(|f| matches!(f, Fault::None));
            if all_ok && !starve {
                prop_assert_eq!(result.score, Score::FULLY_REPRODUCIBLE);
            }
            if matches!(faults[2], Fault::Silent | Fault::Down | Fault::Garbage) || starve {
                prop_assert!(result.assessment_incomplete);
                prop_assert_eq!(result.score, Score::IRREPRODUCIBLE);
            }
        }
    }
}
