//! Benchmark instance manifests.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use repro_core::{ReproductionItem, Score};
use serde::{Deserialize, Serialize};

use crate::error::BenchError;
use crate::stratify::stratify;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Level1,
    Level2,
    Level3,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Level1, Difficulty::Level2, Difficulty::Level3];

    pub fn label(self) -> &'static str {
        match self {
            Difficulty::Level1 => "Level-1",
            Difficulty::Level2 => "Level-2",
            Difficulty::Level3 => "Level-3",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Annotated properties of a package that decide its difficulty level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratificationFeatures {
    pub clear_entry_and_order: bool,
    pub files_needing_modification: u32,
    pub outputs_explicitly_saved: bool,
    pub direct_output_mapping: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkInstance {
    pub id: String,
    /// Paths may be relative to the manifest file. Label-only manifests
    /// (used for `bench score`) can leave them empty.
    #[serde(default)]
    pub paper_path: PathBuf,
    #[serde(default)]
    pub package_path: PathBuf,
    #[serde(default)]
    pub items: Vec<ReproductionItem>,
    pub ground_truth_score: Score,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<Difficulty>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<StratificationFeatures>,
    /// Directory of `<agent>.json` replay transcripts for mock mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcripts: Option<PathBuf>,
    /// Canned interpreter runs for mock mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock_runs: Option<PathBuf>,
}

impl BenchmarkInstance {
    /// The explicit label, else the level derived from features.
    pub fn level(&self) -> Option<Difficulty> {
        self.difficulty.or_else(|| self.features.as_ref().map(stratify))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub instances: Vec<BenchmarkInstance>,
}

impl Manifest {
    /// Reads and validates a manifest; relative paths are resolved against
    /// the manifest's directory.
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let mut manifest: Manifest = serde_json::from_str(&text).map_err(|e| BenchError::parse(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        manifest.resolve_paths(base);
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<(), BenchError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| BenchError::io(path, e))
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if !p.as_os_str().is_empty() && p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for inst in &mut self.instances {
            fix(&mut inst.paper_path);
            fix(&mut inst.package_path);
            if let Some(t) = inst.transcripts.as_mut() {
                fix(t);
            }
            if let Some(m) = inst.mock_runs.as_mut() {
                fix(m);
            }
        }
    }

    /// Structural checks that do not touch the filesystem.
    pub fn validate(&self) -> Result<(), BenchError> {
        let mut seen = BTreeSet::new();
        for inst in &self.instances {
            if inst.id.trim().is_empty() {
                return Err(BenchError::Manifest("instance with empty id".into()));
            }
            if inst.id.contains(['/', '\\']) || inst.id == "." || inst.id == ".." {
                return Err(BenchError::Manifest(format!(
                    "instance id {:?} is not a plain name",
                    inst.id
                )));
            }
            if !seen.insert(inst.id.as_str()) {
                return Err(BenchError::Manifest(format!("duplicate instance id {:?}", inst.id)));
            }
        }
        Ok(())
    }

    /// Checks that every instance can actually be assessed.
    pub fn validate_runnable(&self) -> Result<(), BenchError> {
        self.validate()?;
        for inst in &self.instances {
            let bad = |what: &str| BenchError::Manifest(format!("instance {}: {what}", inst.id));
            if !inst.paper_path.is_file() {
                return Err(bad(&format!("paper {} not found", inst.paper_path.display())));
            }
            if !inst.package_path.is_dir() {
                return Err(bad(&format!("package {} not found", inst.package_path.display())));
            }
            if inst.items.is_empty() {
                return Err(bad("no reproduction items"));
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&BenchmarkInstance> {
        self.instances.iter().find(|i| i.id == id)
    }
}
