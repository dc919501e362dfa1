//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL
//! line each, and exits nonzero if any failed.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use repro_bench::manifest::{BenchmarkInstance, Difficulty, Manifest, StratificationFeatures};
use repro_bench::metrics::{accuracy, applicability, best_of_two, breakdown, confusion, executability, MetricError};
use repro_bench::runner::{copy_dir, run_benchmark, run_dir, BenchOptions, ModelSource};
use repro_bench::synth::{materialize, CASES};
use repro_bench::{stratify, InstanceResult};
use repro_core::deliverables::DeliverableFile;
use repro_core::ledger::token_cost;
use repro_core::llm::{
    BackendError, BackendReply, ChatBackend, ChatClient, ChatMessage, ChatRequest, LlmError, ModelConfig, RetryPolicy,
    ScriptedBackend,
};
use repro_core::validate::validate_scoring_summary;
use repro_core::{files, AssessmentInput, CostLedger, FixedClock, LedgerEntry, Score, ScoringSummary};
use repro_pipeline::{read_score_file, AgentKind, Assessor, Models, PipelineConfig, RunManifest};
use repro_toolkit::edit::edit_copy;
use repro_toolkit::pdf::extract::{extract_elements, ElementKind};
use repro_toolkit::pdf::writer::{Face, PdfBuilder, PdfPage, LETTER};
use repro_toolkit::text::read_paginated;
use repro_toolkit::{truncate_log, Snapshot, ToolError};
use rust_decimal::Decimal;
use serde_json::Value;

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: [(u8, &str, Check); 8] = [
        (1, "synthetic suite scores {4,4,3,4,1} under 2 min", synthetic_suite),
        (
            2,
            "200 fault-injected runs all emit a valid score file under 5 min",
            fault_injection,
        ),
        (
            3,
            "suite runs leave packages untouched outside copies and outputs",
            non_intrusion,
        ),
        (
            4,
            "metrics equal a brute-force recount on 1,000 random sets",
            metric_oracle,
        ),
        (5, "best-of-two exhaustive check", best_of_two_exhaustive),
        (6, "stratifier boundaries and level/score totals", stratification),
        (7, "toolkit micro-properties under 1 min", toolkit_properties),
        (
            8,
            "two pinned-clock mock runs give byte-identical deliverables",
            determinism,
        ),
    ];
    let mut failed = 0;
    for (n, name, check) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            Err(panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  criterion {n}: {name} [{detail}; {secs:.1}s]"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  criterion {n}: {name} [{reason}; {secs:.1}s]");
            }
        }
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn tempdir() -> tempfile::TempDir {
    tempfile::tempdir().expect("tempdir")
}

fn synth_manifest(dir: &Path) -> Manifest {
    Manifest::load(&materialize(dir).expect("materialize")).expect("manifest")
}

fn synthetic_suite() -> Result<String, String> {
    let started = Instant::now();
    let dir = tempdir();
    let manifest = synth_manifest(dir.path());
    let opts = BenchOptions::new(dir.path().join("out"));
    let outcome = run_benchmark(&manifest, &opts, &ModelSource::Scripted).map_err(|e| e.to_string())?;
    let got: Vec<Option<u8>> = outcome
        .results
        .iter()
        .map(|r| r.predicted_score.map(Score::get))
        .collect();
    let want: Vec<Option<u8>> = CASES.iter().map(|c| Some(c.ground_truth.get())).collect();
    ensure!(got == want, "predicted {got:?}, expected {want:?}");
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    Ok(format!("scores {:?}", got.iter().flatten().collect::<Vec<_>>()))
}

#[derive(Debug, Clone, Copy)]
enum Fault {
    None,
    Silent,
    Down,
    Protocol,
    Garbage,
    Truncate(usize),
    Flaky,
}

struct Failing(BackendError);

impl ChatBackend for Failing {
    fn complete(&self, _: ChatRequest<'_>) -> Result<BackendReply, BackendError> {
        Err(self.0.clone())
    }
}

/// Fails twice with a transport error, then replays normally.
struct Flaky {
    inner: ScriptedBackend,
    failures: AtomicUsize,
}

impl ChatBackend for Flaky {
    fn complete(&self, request: ChatRequest<'_>) -> Result<BackendReply, BackendError> {
        if self.failures.fetch_add(1, Ordering::SeqCst) < 2 {
            return Err(BackendError::Transport("503 from upstream".into()));
        }
        self.inner.complete(request)
    }
}

fn random_fault(rng: &mut ChaCha8Rng) -> Fault {
    match rng.gen_range(0..12) {
        0 => Fault::Silent,
        1 => Fault::Down,
        2 => Fault::Protocol,
        3 => Fault::Garbage,
        4 | 5 => Fault::Truncate(rng.gen_range(0..6)),
        6 => Fault::Flaky,
        _ => Fault::None,
    }
}

fn backend(fault: Fault, script: &Path, vars: &[(&str, &str)]) -> Arc<dyn ChatBackend> {
    let replies = || -> Vec<Value> {
        serde_json::from_str(&fs::read_to_string(script).expect("transcript")).expect("transcript json")
    };
    let build = |v: Vec<Value>| ScriptedBackend::from_json(&Value::Array(v).to_string(), vars).expect("script");
    match fault {
        Fault::None => Arc::new(build(replies())),
        Fault::Silent => Arc::new(ScriptedBackend::new(Vec::new())),
        Fault::Down => Arc::new(Failing(BackendError::Transport("connection refused".into()))),
        Fault::Protocol => Arc::new(Failing(BackendError::Protocol("unexpected response shape".into()))),
        Fault::Garbage => {
            let junk = serde_json::json!([
                {"tool_call": {"name": "format_disk", "arguments": {}}},
                {"tool_call": {"name": "run_script", "arguments": {"script_path": 42}}},
                {"tool_call": {"name": "read_file", "arguments": {"path": "/etc/shadow"}}},
                {"content": "all done"},
                {"content": "really done"},
                {"content": "done"},
            ]);
            Arc::new(ScriptedBackend::from_json(&junk.to_string(), vars).expect("junk"))
        }
        Fault::Truncate(n) => Arc::new(build(replies().into_iter().take(n).collect())),
        Fault::Flaky => Arc::new(Flaky {
            inner: build(replies()),
            failures: AtomicUsize::new(0),
        }),
    }
}

struct FaultRun {
    case: usize,
    faults: [Fault; 3],
    budget: Decimal,
    timeout: Duration,
}

fn fault_plan(n: usize, seed: u64) -> Vec<FaultRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| FaultRun {
            case: rng.gen_range(0..CASES.len()),
            faults: [random_fault(&mut rng), random_fault(&mut rng), random_fault(&mut rng)],
            budget: match rng.gen_range(0..4) {
                0 => Decimal::new(rng.gen_range(0..600), 4),
                _ => Decimal::new(4, 0),
            },
            timeout: match rng.gen_range(0..10) {
                0 => Duration::ZERO,
                1 => Duration::from_millis(rng.gen_range(1..400)),
                _ => Duration::from_secs(3600),
            },
        })
        .collect()
}

/// Runs one faulted assessment and checks the score file and scoring
/// summary it left behind.
fn run_faulted(manifest: &Manifest, root: &Path, index: usize, plan: &FaultRun) -> Result<(), String> {
    let inst = &manifest.instances[plan.case];
    let dir = root.join(format!("run{index:03}"));
    let package = dir.join("package");
    copy_dir(&inst.package_path, &package).map_err(|e| e.to_string())?;
    let dir = dir.canonicalize().map_err(|e| e.to_string())?;
    let package = dir.join("package");
    let workspace = dir.join("workspace");
    let paper = inst.paper_path.canonicalize().map_err(|e| e.to_string())?;
    let vars = [
        ("PACKAGE", package.to_str().unwrap()),
        ("WORKSPACE", workspace.to_str().unwrap()),
        ("PAPER", paper.to_str().unwrap()),
    ];
    let scripts = inst.transcripts.as_ref().unwrap();
    let mut models = Models::new(ModelConfig::gpt4o_like(), Arc::new(ScriptedBackend::new(Vec::new())));
    for (kind, fault) in [AgentKind::Setup, AgentKind::Execution, AgentKind::Scoring]
        .into_iter()
        .zip(plan.faults)
    {
        let script = scripts.join(format!("{}.json", kind.as_str()));
        models = models.with_agent(kind, backend(fault, &script, &vars));
    }
    let config = PipelineConfig {
        global_timeout: plan.timeout,
        retry_base_delay_ms: 0,
        ..PipelineConfig::default()
    };
    let assessor = Assessor::new(config, models)
        .map_err(|e| e.to_string())?
        .with_clock(Arc::new(FixedClock::from_unix(1_750_000_000)));
    let input = AssessmentInput {
        paper_path: paper,
        package_root: package,
        items: inst.items.clone(),
        budget_usd: plan.budget,
        workspace_root: workspace,
    };
    let result = assessor.assess(&input).map_err(|e| format!("assess failed: {e}"))?;
    let file_score = read_score_file(&result.workspace, &Default::default())?;
    ensure!(
        file_score == result.score,
        "score file {file_score} vs result {}",
        result.score
    );
    let summary =
        ScoringSummary::read_from(&result.workspace.join(files::SCORING_SUMMARY)).map_err(|e| e.to_string())?;
    let input = AssessmentInput {
        workspace_root: result.workspace.clone(),
        ..input
    };
    let violations = validate_scoring_summary(&summary, &input);
    ensure!(violations.is_empty(), "scoring summary invalid: {violations:?}");
    ensure!(
        summary.score == file_score,
        "summary score {} vs file {file_score}",
        summary.score
    );
    let manifest: RunManifest =
        serde_json::from_str(&fs::read_to_string(result.workspace.join(files::MANIFEST)).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    ensure!(manifest.finished, "run manifest not finalized");
    Ok(())
}

fn fault_injection() -> Result<String, String> {
    let started = Instant::now();
    let dir = tempdir();
    let manifest = synth_manifest(dir.path());
    let plan = fault_plan(200, 0x5eed);
    let root = dir.path().join("faults");
    let failures: Vec<String> = plan
        .par_iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let outcome = catch_unwind(AssertUnwindSafe(|| run_faulted(&manifest, &root, i, p)))
                .unwrap_or_else(|_| Err("panicked".into()));
            outcome
                .err()
                .map(|e| format!("run {i} ({:?}, budget {}): {e}", p.faults, p.budget))
        })
        .collect();
    ensure!(
        failures.is_empty(),
        "{} of 200 failed, first: {}",
        failures.len(),
        failures[0]
    );
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    let faulted = plan
        .iter()
        .filter(|p| p.faults.iter().any(|f| !matches!(f, Fault::None)))
        .count();
    Ok(format!("200/200 valid, {faulted} with agent faults"))
}

fn non_intrusion() -> Result<String, String> {
    let dir = tempdir();
    let manifest = synth_manifest(dir.path());
    let opts = BenchOptions::new(dir.path().join("out"));
    run_benchmark(&manifest, &opts, &ModelSource::Scripted).map_err(|e| e.to_string())?;
    let mut changed = 0;
    for inst in &manifest.instances {
        let before = Snapshot::capture(&inst.package_path).map_err(|e| e.to_string())?;
        let after_root = run_dir(&opts.out_dir, &inst.id, 1).join("package");
        let after = Snapshot::capture(&after_root).map_err(|e| e.to_string())?;
        let allowed = |p: &Path| {
            p.file_stem()
                .is_some_and(|s| s.to_string_lossy().ends_with("_modified"))
                || p.components().next().is_some_and(|c| c.as_os_str() == "output")
        };
        let paths: BTreeSet<&PathBuf> = before.files.keys().chain(after.files.keys()).collect();
        for path in paths {
            if before.files.get(path) != after.files.get(path) {
                changed += 1;
                ensure!(allowed(path), "{}: {} changed", inst.id, path.display());
            }
        }
    }
    ensure!(changed > 0, "no run changed anything, the check is vacuous");
    Ok(format!("0 violations across 5 packages, {changed} allowed changes"))
}

fn labels(gts: &[u8]) -> Vec<BenchmarkInstance> {
    gts.iter()
        .enumerate()
        .map(|(i, g)| BenchmarkInstance {
            id: format!("i{i}"),
            paper_path: PathBuf::new(),
            package_path: PathBuf::new(),
            items: vec![],
            ground_truth_score: Score::new(*g).unwrap(),
            difficulty: None,
            features: None,
            transcripts: None,
            mock_runs: None,
        })
        .collect()
}

fn results(preds: &[Option<u8>]) -> Vec<InstanceResult> {
    preds
        .iter()
        .enumerate()
        .map(|(i, p)| match p {
            Some(p) => InstanceResult::valid(format!("i{i}"), Score::new(*p).unwrap()),
            None => InstanceResult::invalid(format!("i{i}")),
        })
        .collect()
}

fn metric_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut guarded = 0;
    for set in 0..1000 {
        let n = rng.gen_range(0..=200);
        let gts: Vec<u8> = (0..n).map(|_| rng.gen_range(1..=4)).collect();
        let preds: Vec<Option<u8>> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.15) {
                    None
                } else {
                    Some(rng.gen_range(1..=4))
                }
            })
            .collect();
        let (inst, res) = (labels(&gts), results(&preds));

        let mut hits = 0usize;
        let mut valid = 0usize;
        let mut eligible = 0usize;
        let mut executed = 0usize;
        let mut matrix = [[0u32; 5]; 4];
        for k in 0..n {
            let (g, p) = (gts[k], preds[k]);
            if p == Some(g) {
                hits += 1;
            }
            if p.is_some() {
                valid += 1;
            }
            if g >= 2 {
                eligible += 1;
                if p.is_some_and(|p| p >= 2) {
                    executed += 1;
                }
            }
            matrix[g as usize - 1][p.map_or(4, |p| p as usize - 1)] += 1;
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };

        ensure!(accuracy(&res, &inst) == Ok(ratio(hits, n)), "set {set}: accuracy");
        ensure!(applicability(&res) == ratio(valid, n), "set {set}: applicability");
        if eligible == 0 {
            guarded += 1;
            ensure!(
                executability(&res, &inst) == Err(MetricError::NoEligibleInstances),
                "set {set}: guard"
            );
        } else {
            ensure!(
                executability(&res, &inst) == Ok(ratio(executed, eligible)),
                "set {set}: executability"
            );
        }
        let m = confusion(&res, &inst).map_err(|e| e.to_string())?;
        for (g, row) in matrix.iter().enumerate() {
            ensure!(
                m.counts[g][..] == row[..4] && m.invalid[g] == row[4],
                "set {set}: confusion row {g}"
            );
        }
        ensure!(m.diagonal() as usize == hits, "set {set}: diagonal vs accuracy");
    }
    Ok(format!("1000 sets, {guarded} with no eligible instance"))
}

fn best_of_two_exhaustive() -> Result<String, String> {
    let outcomes: Vec<Option<u8>> = vec![None, Some(1), Some(2), Some(3), Some(4)];
    let make = |p: Option<u8>| match p {
        Some(p) => InstanceResult::valid("x", Score::new(p).unwrap()),
        None => InstanceResult::invalid("x"),
    };
    let mut checked = 0;
    for r1 in &outcomes {
        for r2 in &outcomes {
            for gt in 1..=4u8 {
                let got = best_of_two(&make(*r1), &make(*r2), Score::new(gt).unwrap()).map_err(|e| e.to_string())?;
                let want = if *r1 == Some(gt) || *r2 != Some(gt) { r1 } else { r2 };
                ensure!(
                    got.prediction().map(Score::get) == *want,
                    "r1={r1:?} r2={r2:?} gt={gt}: got {:?}",
                    got.prediction()
                );
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} triples, 0 counterexamples"))
}

fn stratification() -> Result<String, String> {
    let f = |clear, files, saved, direct| StratificationFeatures {
        clear_entry_and_order: clear,
        files_needing_modification: files,
        outputs_explicitly_saved: saved,
        direct_output_mapping: direct,
    };
    ensure!(
        stratify(&f(true, 2, true, true)) == Difficulty::Level1,
        "(clear, 2, saved, direct)"
    );
    for saved in [true, false] {
        ensure!(
            stratify(&f(true, 4, saved, true)) == Difficulty::Level2,
            "(clear, 4, {saved}, direct)"
        );
    }
    for bits in 0..8u8 {
        let g = f(bits & 1 != 0, 5, bits & 2 != 0, bits & 4 != 0);
        ensure!(stratify(&g) == Difficulty::Level3, "{g:?}");
    }

    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/level_score_labels.json");
    let manifest = Manifest::load(&path).map_err(|e| e.to_string())?;
    let preds: Vec<InstanceResult> = manifest
        .instances
        .iter()
        .map(|i| InstanceResult::valid(&i.id, i.ground_truth_score))
        .collect();
    let set = breakdown(&preds, &manifest.instances).map_err(|e| e.to_string())?;
    let per_level: BTreeMap<Difficulty, [u32; 4]> = set.per_level.iter().map(|(l, m)| (*l, m.score_totals)).collect();
    let expected = BTreeMap::from([
        (Difficulty::Level1, [6, 4, 1, 17]),
        (Difficulty::Level2, [6, 8, 2, 20]),
        (Difficulty::Level3, [10, 18, 6, 14]),
    ]);
    ensure!(per_level == expected, "per-level cells {per_level:?}");
    let level_totals: Vec<usize> = set.per_level.values().map(|m| m.n).collect();
    ensure!(level_totals == [28, 36, 48], "level totals {level_totals:?}");
    ensure!(
        set.score_totals == [22, 30, 9, 51],
        "score totals {:?}",
        set.score_totals
    );
    ensure!(set.n == 112, "n = {}", set.n);
    Ok("levels 28/36/48, scores 22/30/9/51".into())
}

fn random_text(rng: &mut ChaCha8Rng, alphabet: &[u8], len: usize) -> String {
    (0..len)
        .map(|_| alphabet[rng.gen_range(0..alphabet.len())] as char)
        .collect()
}

fn random_lines(rng: &mut ChaCha8Rng, max_lines: usize) -> String {
    let n = rng.gen_range(0..=max_lines);
    let mut text: String = (0..n)
        .map(|_| {
            let len = rng.gen_range(0..40);
            random_text(rng, b"abc xyz019:=.-_\t", len) + "\n"
        })
        .collect();
    if rng.gen_bool(0.3) {
        text.push_str("no trailing newline");
    }
    text
}

fn toolkit_properties() -> Result<String, String> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dir = tempdir();

    for case in 0..500 {
        let log = random_lines(&mut rng, 300);
        let (head, tail) = (rng.gen_range(0..60), rng.gen_range(0..60));
        let lines: Vec<String> = {
            let mut out = Vec::new();
            let mut cur = String::new();
            for ch in log.chars() {
                cur.push(ch);
                if ch == '\n' {
                    out.push(std::mem::take(&mut cur));
                }
            }
            if !cur.is_empty() {
                out.push(cur);
            }
            out
        };
        let got = truncate_log(&log, head, tail);
        if lines.len() <= head + tail {
            ensure!(got == log, "log {case}: short log changed");
        } else {
            let prefix: String = lines[..head].concat();
            let suffix: String = lines[lines.len() - tail..].concat();
            let marker = format!("... [{} lines omitted] ...\n", lines.len() - head - tail);
            ensure!(
                got == format!("{prefix}{marker}{suffix}"),
                "log {case}: head {head} tail {tail}"
            );
        }
    }

    let anchor = "@@ANCHOR@@";
    for case in 0..200 {
        let k = rng.gen_range(0..4);
        let mut content = String::new();
        for _ in 0..k {
            let len = rng.gen_range(0..80);
            content.push_str(&random_text(&mut rng, b"abcdef \n", len));
            content.push_str(anchor);
        }
        let len = rng.gen_range(0..80);
        content.push_str(&random_text(&mut rng, b"abcdef \n", len));
        let path = dir.path().join(format!("edit{case}.R"));
        fs::write(&path, &content).map_err(|e| e.to_string())?;
        let copy = dir.path().join(format!("edit{case}_modified.R"));
        match (k, edit_copy(&path, anchor, "REPLACED")) {
            (0, Err(ToolError::NoMatch(_))) => ensure!(!copy.exists(), "edit {case}: copy on no match"),
            (1, Ok(out)) => {
                ensure!(out == copy, "edit {case}: wrong target");
                let (before, after) = content.split_once(anchor).unwrap();
                ensure!(
                    fs::read_to_string(&copy).unwrap() == format!("{before}REPLACED{after}"),
                    "edit {case}: wrong content"
                );
            }
            (n, Err(ToolError::AmbiguousMatch { count, .. })) if n >= 2 => {
                ensure!(count == n, "edit {case}: count {count} vs {n}");
                ensure!(!copy.exists(), "edit {case}: copy on ambiguous match");
            }
            (n, other) => return Err(format!("edit {case}: {n} matches gave {other:?}")),
        }
        ensure!(
            fs::read_to_string(&path).unwrap() == content,
            "edit {case}: original changed"
        );
    }

    for case in 0..200 {
        let text = random_lines(&mut rng, 400);
        let path = dir.path().join(format!("page{case}.txt"));
        fs::write(&path, &text).map_err(|e| e.to_string())?;
        let limit = rng.gen_range(1..60);
        let (mut offset, mut joined) = (0, String::new());
        loop {
            let page = read_paginated(&path, offset, limit).map_err(|e| e.to_string())?;
            joined.push_str(&page.text);
            offset += page.line_count;
            if page.eof {
                break;
            }
            ensure!(page.line_count == limit, "page {case}: short page before eof");
        }
        ensure!(joined == text, "page {case}: reassembly differs (limit {limit})");
    }

    let solid = |c: [u8; 3], w, h| RgbImage::from_pixel(w, h, Rgb(c));
    let imgs = [
        solid([200, 0, 0], 5, 3),
        solid([0, 150, 0], 4, 4),
        solid([0, 0, 220], 2, 6),
    ];
    let mut pdf = PdfBuilder::new();
    let mut p1 = PdfPage::new(LETTER);
    p1.text(72.0, 700.0, 12.0, Face::Regular, "one")
        .image(imgs[0].clone(), 72.0, 400.0, 100.0, 60.0);
    pdf.push(p1);
    let mut p2 = PdfPage::new(LETTER);
    p2.text(72.0, 700.0, 12.0, Face::Regular, "two");
    pdf.push(p2);
    let mut p3 = PdfPage::new(LETTER);
    p3.image(imgs[1].clone(), 72.0, 500.0, 80.0, 80.0)
        .image(imgs[2].clone(), 300.0, 100.0, 40.0, 120.0);
    pdf.push(p3);
    let pdf_path = dir.path().join("three.pdf");
    pdf.save(&pdf_path).map_err(|e| e.to_string())?;
    let m = extract_elements(&pdf_path, &dir.path().join("elements"), 72).map_err(|e| e.to_string())?;
    let names: Vec<String> = m
        .elements
        .iter()
        .map(|e| e.path.file_name().unwrap().to_string_lossy().into())
        .collect();
    let want = [
        "page_001.png",
        "page_001_img01.png",
        "page_002.png",
        "page_003.png",
        "page_003_img01.png",
        "page_003_img02.png",
    ];
    ensure!(names == want, "element order {names:?}");
    let embedded: Vec<RgbImage> = m
        .elements
        .iter()
        .filter(|e| e.kind == ElementKind::EmbeddedImage)
        .map(|e| image::open(&e.path).unwrap().to_rgb8())
        .collect();
    ensure!(embedded == imgs, "embedded images differ");

    let model = ModelConfig::gpt4o_like();
    for case in 0..200 {
        let (pp, cp) = (rng.gen_range(0..5000u64), rng.gen_range(0..20000u64));
        let mut ledger = CostLedger::new();
        let mut oracle: i64 = 0;
        for _ in 0..rng.gen_range(0..50) {
            let (pt, ct) = (rng.gen_range(0..200_000u64), rng.gen_range(0..4_000u64));
            let cost = token_cost(pt, ct, Decimal::new(pp as i64, 2), Decimal::new(cp as i64, 2));
            let exact = (pt * pp + ct * cp) as i64;
            ensure!(cost == Decimal::new(exact, 8), "ledger {case}: token cost");
            oracle += exact;
            ledger.record(LedgerEntry {
                agent_name: "a".into(),
                model_id: "m".into(),
                prompt_tokens: pt,
                completion_tokens: ct,
                usd_cost: cost,
                wall_time_ms: 0,
            });
        }
        ensure!(ledger.total() == Decimal::new(oracle, 8), "ledger {case}: total");
        ensure!(ledger.recount() == ledger.total(), "ledger {case}: recount");

        let history = [ChatMessage::user("hello")];
        let backend = ScriptedBackend::new(vec![ChatMessage::assistant("ok"); 1]);
        let client = ChatClient::new(&backend, &model).with_retry(RetryPolicy::immediate(1));
        let estimate = client.estimate_cost(&history, &[]);
        let spent = ledger.total();
        let cent = Decimal::new(1, 2);
        for (budget, allowed) in [
            (spent, false),
            (spent + estimate - cent, false),
            (spent + estimate, true),
        ] {
            let mut l = ledger.clone();
            let outcome = client.chat(&history, &[], &mut l, budget, "a");
            let refused = matches!(outcome, Err(LlmError::BudgetExceeded { .. }));
            ensure!(
                refused != allowed,
                "ledger {case}: budget {budget} spent {spent} estimate {estimate}"
            );
            if allowed {
                ensure!(
                    l.entries().len() == ledger.entries().len() + 1,
                    "ledger {case}: no entry appended"
                );
                break;
            }
        }
    }

    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok("500 logs, 200 edits, 200 paginations, 1 PDF, 200 ledgers".into())
}

fn deliverable_bytes(out: &Path, manifest: &Manifest) -> BTreeMap<String, Vec<u8>> {
    let mut all = BTreeMap::new();
    for inst in &manifest.instances {
        let ws = run_dir(out, &inst.id, 1).join("workspace");
        for name in [
            files::PLAN,
            files::EXECUTION_SUMMARY,
            files::SCORING_SUMMARY,
            "reproducibility_score.json",
        ] {
            let bytes = fs::read(ws.join(name)).unwrap_or_default();
            all.insert(format!("{}/{name}", inst.id), bytes);
        }
    }
    all
}

fn determinism() -> Result<String, String> {
    let dir = tempdir();
    let manifest = synth_manifest(dir.path());
    let mut opts = BenchOptions::new(dir.path().join("out"));
    opts.clock = Some(Arc::new(FixedClock::from_unix(1_750_000_000)));
    opts.workers = 5;
    run_benchmark(&manifest, &opts, &ModelSource::Scripted).map_err(|e| e.to_string())?;
    let first = deliverable_bytes(&opts.out_dir, &manifest);
    run_benchmark(&manifest, &opts, &ModelSource::Scripted).map_err(|e| e.to_string())?;
    let second = deliverable_bytes(&opts.out_dir, &manifest);
    ensure!(first.values().all(|b| !b.is_empty()), "some deliverable is missing");
    for (name, bytes) in &first {
        ensure!(second.get(name) == Some(bytes), "{name} differs between runs");
    }
    Ok(format!("{} files identical", first.len()))
}
