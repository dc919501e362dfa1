use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rust_decimal::Decimal;

/// Assess the computational reproducibility of a paper's replication
/// package, evaluate the assessor on a benchmark, or run its tools alone.
#[derive(Debug, Parser)]
#[command(name = "repro", version)]
pub struct Cli {
    /// TOML file with defaults; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Log more to stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assess one paper and package.
    Assess(AssessArgs),
    /// Run or score a benchmark.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Run a single agent tool directly.
    #[command(subcommand)]
    Tools(ToolCommand),
}

/// Settings shared by commands that run the pipeline.
#[derive(Debug, Clone, Args)]
pub struct RunFlags {
    /// Model configuration file (TOML or JSON).
    #[arg(long, value_name = "FILE")]
    pub model_config: Option<PathBuf>,
    /// Spending cap per run in USD.
    #[arg(long, value_name = "USD")]
    pub budget: Option<Decimal>,
    /// Wall-clock limit for a whole run.
    #[arg(long, value_name = "MINUTES")]
    pub timeout_minutes: Option<u64>,
    /// Also run the report stage.
    #[arg(long)]
    pub report: bool,
    /// Replay scripted transcripts instead of calling a model.
    #[arg(long)]
    pub mock: bool,
}

#[derive(Debug, Args)]
pub struct AssessArgs {
    /// Paper PDF.
    #[arg(long, value_name = "PDF")]
    pub paper: PathBuf,
    /// Root of the replication package.
    #[arg(long, value_name = "DIR")]
    pub package: PathBuf,
    /// JSON array of item names or {name, description} records.
    #[arg(long, value_name = "FILE")]
    pub items: PathBuf,
    /// Workspace directory for this run; must be empty or absent.
    #[arg(long, value_name = "DIR")]
    pub workspace: Option<PathBuf>,
    /// Parent directory for auto-named workspaces.
    #[arg(long, value_name = "DIR")]
    pub workspace_root: Option<PathBuf>,
    /// Directory of <agent>.json transcripts for --mock.
    #[arg(long, value_name = "DIR")]
    pub transcripts: Option<PathBuf>,
    /// Canned interpreter runs for --mock (JSON).
    #[arg(long, value_name = "FILE")]
    pub mock_runs: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunFlags,
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Assess every manifest instance and write results and metrics.
    Run(BenchRunArgs),
    /// Recompute metrics from an existing results file.
    Score(BenchScoreArgs),
    /// Write the five-instance synthetic benchmark.
    Synth(BenchSynthArgs),
}

#[derive(Debug, Args)]
pub struct BenchRunArgs {
    /// Benchmark manifest (JSON).
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Output directory for runs, results.jsonl and metrics.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Runs per instance; with 2 the better run is kept.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=2))]
    pub runs: u32,
    /// Instances assessed in parallel.
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    /// Label corrections applied before scoring (JSON).
    #[arg(long, value_name = "FILE")]
    pub patch: Option<PathBuf>,
    /// Add per-difficulty tables.
    #[arg(long)]
    pub stratify: bool,
    #[command(flatten)]
    pub run: RunFlags,
}

#[derive(Debug, Args)]
pub struct BenchScoreArgs {
    /// Benchmark manifest (JSON).
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// results.jsonl from an earlier run.
    #[arg(long, value_name = "FILE")]
    pub results: PathBuf,
    /// Label corrections applied before scoring (JSON).
    #[arg(long, value_name = "FILE")]
    pub patch: Option<PathBuf>,
    /// Add per-difficulty tables.
    #[arg(long)]
    pub stratify: bool,
    /// Where to write metrics; defaults to the results file's directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchSynthArgs {
    /// Directory to write the manifest and instances into.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum ToolCommand {
    /// Render PDF pages and export embedded images in document order.
    ExtractElements {
        pdf: PathBuf,
        out_dir: PathBuf,
        /// Render resolution.
        #[arg(long, default_value_t = 100)]
        dpi: u32,
    },
    /// Convert a PDF, CSV, TSV, XLSX or text file into PNG images.
    ConvertImage {
        artifact: PathBuf,
        out_dir: PathBuf,
        /// Render resolution for PDFs.
        #[arg(long, default_value_t = 100)]
        dpi: u32,
    },
    /// Print the first and last lines of a log.
    TruncateLog {
        file: PathBuf,
        /// Lines kept from the start.
        #[arg(long, default_value_t = 50)]
        head: usize,
        /// Lines kept from the end.
        #[arg(long, default_value_t = 50)]
        tail: usize,
    },
    /// Replace one unique occurrence in a _modified copy of a file.
    EditCopy {
        file: PathBuf,
        /// Exact text to find; must occur once.
        #[arg(long)]
        search: String,
        /// Replacement text.
        #[arg(long)]
        replace: String,
    },
    /// Render Markdown to PDF.
    RenderPdf { markdown: PathBuf, out: PathBuf },
}
