//! Runs the assessor over every manifest instance, optionally twice.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use repro_core::llm::ModelConfig;
use repro_core::{AssessmentInput, Clock, Score};
use repro_pipeline::{read_score_file, Assessor, Models, PipelineConfig};
use repro_toolkit::{MockRuns, RunnerMode};
use rust_decimal::Decimal;
use tracing::{info, warn};

use crate::error::BenchError;
use crate::manifest::{BenchmarkInstance, Manifest};
use crate::metrics::{best_of_two, breakdown, InstanceResult, RunAttempt};
use crate::report::{write_reports, MetricsReport};
use crate::results::write_jsonl;

pub const RESULTS_JSONL: &str = "results.jsonl";

/// Builds the models for one live run.
pub type LiveModels<'a> = dyn Fn() -> Result<Models, String> + Sync + 'a;

pub enum ModelSource<'a> {
    /// Replays each instance's `transcripts` directory and uses its canned
    /// interpreter runs when present.
    Scripted,
    Live(&'a LiveModels<'a>),
}

pub struct BenchOptions {
    pub out_dir: PathBuf,
    pub runs: u32,
    pub workers: usize,
    pub budget_usd: Decimal,
    pub model: ModelConfig,
    pub config: PipelineConfig,
    pub stratify: bool,
    pub clock: Option<Arc<dyn Clock>>,
}

impl BenchOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            runs: 1,
            workers: 1,
            budget_usd: Decimal::new(4, 0),
            model: ModelConfig::gpt4o_like(),
            config: PipelineConfig::default(),
            stratify: false,
            clock: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub results: Vec<InstanceResult>,
    /// Per-run results, indexed by run number minus one.
    pub raw: Vec<Vec<InstanceResult>>,
    pub report: MetricsReport,
    pub results_path: PathBuf,
}

/// Where one run lives: `<out>/runs/<id>/run<k>/{package,workspace}`.
pub fn run_dir(out_dir: &Path, id: &str, run: u32) -> PathBuf {
    out_dir.join("runs").join(id).join(format!("run{run}"))
}

pub fn run_benchmark(
    manifest: &Manifest,
    opts: &BenchOptions,
    source: &ModelSource<'_>,
) -> Result<BenchOutcome, BenchError> {
    manifest.validate_runnable()?;
    if !(1..=2).contains(&opts.runs) {
        return Err(BenchError::Config(format!("runs must be 1 or 2, got {}", opts.runs)));
    }
    fs::create_dir_all(&opts.out_dir).map_err(|e| BenchError::io(&opts.out_dir, e))?;
    let jobs: Vec<(usize, u32)> = (1..=opts.runs)
        .flat_map(|run| (0..manifest.instances.len()).map(move |i| (i, run)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    let attempts: Vec<RunAttempt> = pool.install(|| {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|&(i, run)| run_instance(&manifest.instances[i], run, opts, source))
            .collect()
    });

    let n = manifest.instances.len();
    let raw: Vec<Vec<InstanceResult>> = attempts
        .chunks(n.max(1))
        .map(|chunk| {
            chunk
                .iter()
                .zip(&manifest.instances)
                .map(|(a, inst)| InstanceResult::from_run(&inst.id, a.clone()))
                .collect()
        })
        .collect();
    let results: Vec<InstanceResult> = if opts.runs == 2 {
        manifest
            .instances
            .iter()
            .enumerate()
            .map(|(i, inst)| best_of_two(&raw[0][i], &raw[1][i], inst.ground_truth_score))
            .collect::<Result<_, _>>()?
    } else {
        raw.first().cloned().unwrap_or_default()
    };

    let report = MetricsReport {
        runs_per_instance: opts.runs,
        aggregate: breakdown(&results, &manifest.instances)?,
        first_run: if opts.runs > 1 {
            Some(breakdown(&raw[0], &manifest.instances)?)
        } else {
            None
        },
    };
    let results_path = opts.out_dir.join(RESULTS_JSONL);
    write_jsonl(&results_path, &results)?;
    write_reports(&opts.out_dir, &report, opts.stratify)?;
    Ok(BenchOutcome {
        results,
        raw,
        report,
        results_path,
    })
}

/// Assesses one instance once. Never fails: problems end up in the
/// attempt's `error` and an invalid output.
pub fn run_instance(inst: &BenchmarkInstance, run: u32, opts: &BenchOptions, source: &ModelSource<'_>) -> RunAttempt {
    let started = Instant::now();
    let mut attempt = RunAttempt {
        run,
        predicted_score: None,
        output_valid: false,
        assessment_incomplete: false,
        cost_usd: Decimal::ZERO,
        wall_time_s: 0.0,
        workspace: None,
        error: None,
        intrusions: 0,
    };
    match assess_once(inst, run, opts, source, &mut attempt) {
        Ok(score) => {
            attempt.predicted_score = Some(score);
            attempt.output_valid = true;
        }
        Err(e) => {
            warn!(instance = %inst.id, run, error = %e, "instance run produced no valid score");
            attempt.error = Some(e);
        }
    }
    attempt.wall_time_s = started.elapsed().as_secs_f64();
    info!(instance = %inst.id, run, score = ?attempt.predicted_score, "instance done");
    attempt
}

fn assess_once(
    inst: &BenchmarkInstance,
    run: u32,
    opts: &BenchOptions,
    source: &ModelSource<'_>,
    attempt: &mut RunAttempt,
) -> Result<Score, String> {
    let dir = run_dir(&opts.out_dir, &inst.id, run);
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let dir = dir.canonicalize().map_err(|e| e.to_string())?;
    let package = dir.join("package");
    copy_dir(&inst.package_path, &package).map_err(|e| format!("copying package: {e}"))?;
    let workspace = dir.join("workspace");
    let paper = inst
        .paper_path
        .canonicalize()
        .map_err(|e| format!("{}: {e}", inst.paper_path.display()))?;
    attempt.workspace = Some(workspace.clone());

    let (models, runner) = match source {
        ModelSource::Scripted => {
            let vars = [
                ("PACKAGE", package.to_str().unwrap_or_default()),
                ("WORKSPACE", workspace.to_str().unwrap_or_default()),
                ("PAPER", paper.to_str().unwrap_or_default()),
            ];
            let scripts = inst.transcripts.clone().unwrap_or_else(|| dir.join("no-transcripts"));
            let models = Models::scripted(opts.model.clone(), &scripts, &vars)?;
            let runner = match &inst.mock_runs {
                Some(path) => RunnerMode::Mock(MockRuns::load(path).map_err(|e| e.to_string())?),
                None => RunnerMode::Real,
            };
            (models, runner)
        }
        ModelSource::Live(factory) => (factory()?, RunnerMode::Real),
    };
    let mut assessor = Assessor::new(opts.config.clone(), models)
        .map_err(|e| e.to_string())?
        .with_runner(runner);
    if let Some(clock) = &opts.clock {
        assessor = assessor.with_clock(clock.clone());
    }
    let input = AssessmentInput {
        paper_path: paper,
        package_root: package,
        items: inst.items.clone(),
        budget_usd: opts.budget_usd,
        workspace_root: workspace,
    };
    let result = assessor.assess(&input).map_err(|e| e.to_string())?;
    attempt.cost_usd = result.ledger.total();
    attempt.assessment_incomplete = result.assessment_incomplete;
    attempt.intrusions = result.intrusions.len();
    read_score_file(&result.workspace, &opts.config.score_file)
}

/// Recursive copy of regular files and directories; symlinks are copied
/// as links.
pub fn copy_dir(from: &Path, to: &Path) -> std::io::Result<()> {
    fs::create_dir_all(to)?;
    for entry in fs::read_dir(from)? {
        let entry = entry?;
        let kind = entry.file_type()?;
        let target = to.join(entry.file_name());
        if kind.is_dir() {
            copy_dir(&entry.path(), &target)?;
        } else if kind.is_symlink() {
            #[cfg(unix)]
            std::os::unix::fs::symlink(fs::read_link(entry.path())?, &target)?;
            #[cfg(not(unix))]
            fs::copy(entry.path(), &target).map(|_| ())?;
        } else {
            fs::copy(entry.path(), &target)?;
        }
    }
    Ok(())
}
