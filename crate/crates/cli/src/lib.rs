//! The `repro` command-line tool.

pub mod cli;
pub mod config;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::Parser;
use repro_bench::report::{render_text, write_reports, MetricsReport};
use repro_bench::results::read_jsonl;
use repro_bench::runner::{run_benchmark, BenchOptions, ModelSource};
use repro_bench::{breakdown, InstanceResult, Manifest, PatchFile};
use repro_core::input::load_items;
use repro_core::llm::HttpBackend;
use repro_core::AssessmentInput;
use repro_pipeline::{read_score_file, Assessor, Models, PipelineError};
use repro_toolkit::{MockRuns, RunnerMode, ToolError};
use tracing::warn;

use crate::cli::{AssessArgs, BenchCommand, BenchRunArgs, BenchScoreArgs, Cli, Command, RunFlags, ToolCommand};
use crate::config::{resolve, CliConfig, FileConfig, Settings};

/// Bad invocation: missing paths, malformed config or manifest. Exits 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

// println! panics on a closed pipe (e.g. `repro ... | head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

const HTTP_TIMEOUT: Duration = Duration::from_secs(180);

pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    init_logging(cli.verbose);
    match run(cli) {
        Ok(code) => code,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_env("REPRO_LOG").unwrap_or_else(|_| default.into());
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Assess(args) => assess(cli.config.as_deref(), args),
        Command::Bench(BenchCommand::Run(args)) => bench_run(cli.config.as_deref(), args),
        Command::Bench(BenchCommand::Score(args)) => bench_score(args),
        Command::Bench(BenchCommand::Synth(args)) => {
            let path = repro_bench::synth::materialize(&args.out)?;
            out!("{}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Tools(tool) => tools(tool),
    }
}

fn flag_settings(flags: &RunFlags) -> Settings {
    Settings {
        model_config: flags.model_config.clone(),
        budget_usd: flags.budget,
        timeout_minutes: flags.timeout_minutes,
        report_stage: flags.report.then_some(true),
        mock_mode: flags.mock.then_some(true),
        ..Settings::default()
    }
}

fn load_config(path: Option<&Path>, flags: Settings) -> Result<CliConfig> {
    let file = match path {
        Some(p) => FileConfig::load(p).map_err(usage)?,
        None => FileConfig::default(),
    };
    resolve(file, flags, |name| std::env::var(name).ok()).map_err(usage)
}

fn live_models(cfg: &CliConfig) -> Models {
    if cfg.api_key.is_none() && !cfg.budget_usd.is_zero() {
        warn!(var = %cfg.model.api_key_env, "no API key in the environment; model calls will fail");
    }
    let key = cfg.api_key.as_ref().map(|k| k.expose().to_string());
    Models::new(cfg.model.clone(), Arc::new(HttpBackend::new(key, HTTP_TIMEOUT)))
}

fn canonical_dir(path: &Path) -> Result<PathBuf> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(path.canonicalize()?)
}

fn assess(config: Option<&Path>, args: AssessArgs) -> Result<ExitCode> {
    let mut flags = flag_settings(&args.run);
    flags.workspace_root = args.workspace_root.clone();
    let cfg = load_config(config, flags)?;
    if !args.paper.is_file() {
        return Err(usage(format!("paper not found: {}", args.paper.display())));
    }
    if !args.package.is_dir() {
        return Err(usage(format!(
            "package directory not found: {}",
            args.package.display()
        )));
    }
    let items = load_items(&args.items).map_err(|e| usage(e.to_string()))?;

    let workspace = match &args.workspace {
        Some(w) => w.clone(),
        None => {
            let name = args
                .package
                .canonicalize()?
                .file_name()
                .map_or("package".into(), |n| n.to_string_lossy().into_owned());
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            cfg.workspace_root.join(format!("{name}-{secs}"))
        }
    };
    if workspace.is_dir() && fs::read_dir(&workspace)?.next().is_some() {
        return Err(usage(format!("workspace {} is not empty", workspace.display())));
    }
    let workspace = canonical_dir(&workspace)?;
    let package = args.package.canonicalize()?;
    let paper = args.paper.canonicalize()?;

    let (models, runner) = if cfg.mock_mode {
        let dir = args
            .transcripts
            .as_ref()
            .ok_or_else(|| usage("mock mode needs --transcripts DIR"))?;
        let vars = [
            ("PACKAGE", package.to_str().unwrap_or_default()),
            ("WORKSPACE", workspace.to_str().unwrap_or_default()),
            ("PAPER", paper.to_str().unwrap_or_default()),
        ];
        let models = Models::scripted(cfg.model.clone(), dir, &vars).map_err(usage)?;
        let runner = match &args.mock_runs {
            Some(path) => RunnerMode::Mock(MockRuns::load(path).map_err(|e| usage(e.to_string()))?),
            None => RunnerMode::Real,
        };
        (models, runner)
    } else {
        (live_models(&cfg), RunnerMode::Real)
    };

    let assessor = Assessor::new(cfg.pipeline.clone(), models)
        .map_err(|e| usage(e.to_string()))?
        .with_runner(runner);
    let input = AssessmentInput {
        paper_path: paper,
        package_root: package,
        items,
        budget_usd: cfg.budget_usd,
        workspace_root: workspace,
    };
    let result = match assessor.assess(&input) {
        Ok(r) => r,
        Err(e @ (PipelineError::Input(_) | PipelineError::WorkspaceNotEmpty(_) | PipelineError::Config(_))) => {
            return Err(usage(e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };

    out!("score: {}", result.score);
    out!("assessment_incomplete: {}", result.assessment_incomplete);
    if let Some(reason) = &result.emergency_reason {
        out!("emergency_reason: {reason}");
    }
    out!("cost_usd: {}", result.ledger.total());
    out!("workspace: {}", result.workspace.display());
    out!("score_file: {}", result.score_file.display());
    out!("deliverables:");
    for path in &result.deliverable_paths {
        out!("  {}", path.display());
    }
    match read_score_file(&result.workspace, &cfg.pipeline.score_file) {
        Ok(_) => Ok(ExitCode::SUCCESS),
        Err(e) => {
            eprintln!("error: score file invalid: {e}");
            Ok(ExitCode::from(1))
        }
    }
}

fn load_manifest(path: &Path, patch: Option<&Path>) -> Result<Manifest> {
    let raw = Manifest::load(path).map_err(|e| usage(e.to_string()))?;
    match patch {
        Some(p) => {
            let patches = PatchFile::load(p).map_err(|e| usage(e.to_string()))?;
            patches.apply(&raw).map_err(|e| usage(e.to_string()))
        }
        None => Ok(raw),
    }
}

fn bench_run(config: Option<&Path>, args: BenchRunArgs) -> Result<ExitCode> {
    let mut flags = flag_settings(&args.run);
    flags.worker_count = args.workers;
    let cfg = load_config(config, flags)?;
    let manifest = load_manifest(&args.manifest, args.patch.as_deref())?;
    manifest.validate_runnable().map_err(|e| usage(e.to_string()))?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    if args.patch.is_some() {
        manifest.save(&args.out.join("manifest.corrected.json"))?;
    }

    let opts = BenchOptions {
        out_dir: args.out.clone(),
        runs: args.runs,
        workers: cfg.worker_count,
        budget_usd: cfg.budget_usd,
        model: cfg.model.clone(),
        config: cfg.pipeline.clone(),
        stratify: args.stratify,
        clock: None,
    };
    let factory = || Ok(live_models(&cfg));
    let source = if cfg.mock_mode {
        ModelSource::Scripted
    } else {
        ModelSource::Live(&factory)
    };
    let outcome = run_benchmark(&manifest, &opts, &source)?;
    out!("{}", render_text(&outcome.report, args.stratify).trim_end());
    out!("\nresults: {}", outcome.results_path.display());
    out!(
        "metrics: {}",
        args.out.join(repro_bench::report::METRICS_JSON).display()
    );
    Ok(ExitCode::SUCCESS)
}

fn bench_score(args: BenchScoreArgs) -> Result<ExitCode> {
    let manifest = load_manifest(&args.manifest, args.patch.as_deref())?;
    let results = read_jsonl(&args.results).map_err(|e| usage(e.to_string()))?;
    let runs = results.iter().map(|r| r.runs.len()).max().unwrap_or(1).max(1) as u32;
    let first_run = if runs > 1 {
        let first: Vec<InstanceResult> = results
            .iter()
            .map(|r| match r.runs.first() {
                Some(run) => InstanceResult::from_run(&r.id, run.clone()),
                None => r.clone(),
            })
            .collect();
        Some(breakdown(&first, &manifest.instances)?)
    } else {
        None
    };
    let report = MetricsReport {
        runs_per_instance: runs,
        aggregate: breakdown(&results, &manifest.instances)?,
        first_run,
    };
    let out = match args.out {
        Some(dir) => dir,
        None => args
            .results
            .parent()
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    write_reports(&out, &report, args.stratify)?;
    out!("{}", render_text(&report, args.stratify).trim_end());
    Ok(ExitCode::SUCCESS)
}

fn tool_error(e: ToolError) -> anyhow::Error {
    anyhow::anyhow!("[{}] {e}", e.code())
}

fn tools(tool: ToolCommand) -> Result<ExitCode> {
    use repro_toolkit::{convert, edit, pdf, text};
    match tool {
        ToolCommand::ExtractElements {
            pdf: path,
            out_dir,
            dpi,
        } => {
            let manifest = pdf::extract::extract_elements(&path, &out_dir, dpi).map_err(tool_error)?;
            out!("{}", serde_json::to_string_pretty(&manifest)?);
        }
        ToolCommand::ConvertImage { artifact, out_dir, dpi } => {
            for p in convert::convert_to_image(&artifact, &out_dir, dpi).map_err(tool_error)? {
                out!("{}", p.display());
            }
        }
        ToolCommand::TruncateLog { file, head, tail } => {
            let bytes = fs::read(&file).map_err(|e| tool_error(ToolError::io(&file, e)))?;
            out!(
                "{}",
                text::truncate_log(&String::from_utf8_lossy(&bytes), head, tail).trim_end_matches('\n')
            );
        }
        ToolCommand::EditCopy { file, search, replace } => {
            let out = edit::edit_copy(&file, &search, &replace).map_err(tool_error)?;
            out!("{}", out.display());
        }
        ToolCommand::RenderPdf { markdown, out } => {
            let md = fs::read_to_string(&markdown).map_err(|e| tool_error(ToolError::io(&markdown, e)))?;
            pdf::writer::markdown_to_pdf(&md, markdown.parent())
                .save(&out)
                .map_err(tool_error)?;
            out!("{}", out.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}
