//! Settings resolution: config file, then command-line flags, then
//! environment variables (secrets only).

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use repro_core::llm::ModelConfig;
use repro_pipeline::PipelineConfig;
use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer};

/// The settings a config file or flags may supply. `None` means "not set
/// at this layer".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub model_config: Option<PathBuf>,
    pub budget_usd: Option<Decimal>,
    pub timeout_minutes: Option<u64>,
    pub workspace_root: Option<PathBuf>,
    pub report_stage: Option<bool>,
    pub mock_mode: Option<bool>,
    pub worker_count: Option<usize>,
}

impl Settings {
    /// Values from `self`, falling back to `lower` field by field.
    pub fn over(self, lower: Settings) -> Settings {
        Settings {
            model_config: self.model_config.or(lower.model_config),
            budget_usd: self.budget_usd.or(lower.budget_usd),
            timeout_minutes: self.timeout_minutes.or(lower.timeout_minutes),
            workspace_root: self.workspace_root.or(lower.workspace_root),
            report_stage: self.report_stage.or(lower.report_stage),
            mock_mode: self.mock_mode.or(lower.mock_mode),
            worker_count: self.worker_count.or(lower.worker_count),
        }
    }
}

/// Accepts `4`, `4.5` or `"4.50"`.
fn decimal_opt<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Decimal>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Float(f64),
        Str(String),
    }
    let parsed = match Option::<Raw>::deserialize(d)? {
        None => return Ok(None),
        Some(Raw::Int(i)) => Decimal::from(i),
        Some(Raw::Float(f)) => Decimal::from_str(&f.to_string()).map_err(serde::de::Error::custom)?,
        Some(Raw::Str(s)) => Decimal::from_str(s.trim()).map_err(serde::de::Error::custom)?,
    };
    Ok(Some(parsed))
}

/// Contents of the TOML config file.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    pub settings: Settings,
    pub pipeline: Option<PipelineConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    model_config: Option<PathBuf>,
    #[serde(default, deserialize_with = "decimal_opt")]
    budget_usd: Option<Decimal>,
    timeout_minutes: Option<u64>,
    workspace_root: Option<PathBuf>,
    report_stage: Option<bool>,
    mock_mode: Option<bool>,
    worker_count: Option<usize>,
    pipeline: Option<PipelineConfig>,
}

impl FileConfig {
    /// Parses the file; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg = Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.settings.model_config, &mut cfg.settings.workspace_root]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        if text.lines().any(|l| l.trim_start().starts_with("api_key")) {
            return Err("API keys are read from the environment only; remove api_key from the config file".into());
        }
        let raw: RawFile = toml::from_str(text).map_err(|e| e.to_string())?;
        Ok(Self {
            settings: Settings {
                model_config: raw.model_config,
                budget_usd: raw.budget_usd,
                timeout_minutes: raw.timeout_minutes,
                workspace_root: raw.workspace_root,
                report_stage: raw.report_stage,
                mock_mode: raw.mock_mode,
                worker_count: raw.worker_count,
            },
            pipeline: raw.pipeline,
        })
    }
}

/// A value that must never be printed or written anywhere.
#[derive(Clone, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret(***)")
    }
}

pub const DEFAULT_BUDGET_CENTS: i64 = 400;
pub const DEFAULT_WORKSPACE_ROOT: &str = "runs";

#[derive(Debug, Clone)]
pub struct CliConfig {
    pub model: ModelConfig,
    pub budget_usd: Decimal,
    pub workspace_root: PathBuf,
    pub mock_mode: bool,
    pub worker_count: usize,
    pub pipeline: PipelineConfig,
    pub api_key: Option<Secret>,
}

pub fn load_model_config(path: &Path) -> Result<ModelConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    let model: ModelConfig = parsed.map_err(|e| format!("{}: {e}", path.display()))?;
    model.validate().map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(model)
}

/// Merges file and flag settings and reads the API key through `env`.
pub fn resolve(file: FileConfig, flags: Settings, env: impl Fn(&str) -> Option<String>) -> Result<CliConfig, String> {
    let s = flags.over(file.settings);
    let model = match &s.model_config {
        Some(path) => load_model_config(path)?,
        None => ModelConfig::gpt4o_like(),
    };
    let budget_usd = s.budget_usd.unwrap_or(Decimal::new(DEFAULT_BUDGET_CENTS, 2));
    if budget_usd.is_sign_negative() && !budget_usd.is_zero() {
        return Err(format!("budget must be nonnegative, got {budget_usd}"));
    }
    let mut pipeline = file.pipeline.unwrap_or_default();
    if let Some(minutes) = s.timeout_minutes {
        pipeline.global_timeout = Duration::from_secs(minutes * 60);
    }
    if let Some(report) = s.report_stage {
        pipeline.report_stage = report;
    }
    pipeline.validate()?;
    let worker_count = s.worker_count.unwrap_or(1);
    if worker_count == 0 {
        return Err("worker count must be at least 1".into());
    }
    let api_key = env(&model.api_key_env).filter(|k| !k.is_empty()).map(Secret);
    Ok(CliConfig {
        model,
        budget_usd,
        workspace_root: s
            .workspace_root
            .unwrap_or_else(|| PathBuf::from(DEFAULT_WORKSPACE_ROOT)),
        mock_mode: s.mock_mode.unwrap_or(false),
        worker_count,
        pipeline,
        api_key,
    })
}
