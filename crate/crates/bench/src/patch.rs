//! Declarative label corrections applied on top of a raw manifest.

use std::fs;
use std::path::Path;

use repro_core::{ReproductionItem, Score};
use serde::{Deserialize, Serialize};

use crate::error::BenchError;
use crate::manifest::{Difficulty, Manifest, StratificationFeatures};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Patch {
    /// Drops reproduction items that the ground truth never covered.
    RemoveItems {
        id: String,
        items: Vec<String>,
        #[serde(default)]
        reason: String,
    },
    /// Replaces the item list so it matches what the label was judged on.
    AlignScope {
        id: String,
        items: Vec<ReproductionItem>,
        #[serde(default)]
        reason: String,
    },
    /// Corrects the ground-truth score and optionally the difficulty data.
    Relabel {
        id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ground_truth_score: Option<Score>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        difficulty: Option<Difficulty>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        features: Option<StratificationFeatures>,
        #[serde(default)]
        reason: String,
    },
}

impl Patch {
    pub fn id(&self) -> &str {
        match self {
            Patch::RemoveItems { id, .. } | Patch::AlignScope { id, .. } | Patch::Relabel { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PatchFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub patches: Vec<Patch>,
}

impl PatchFile {
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| BenchError::parse(path, e))
    }

    /// Returns the corrected manifest; the input is left untouched.
    pub fn apply(&self, raw: &Manifest) -> Result<Manifest, BenchError> {
        let mut out = raw.clone();
        for (n, patch) in self.patches.iter().enumerate() {
            let err = |msg: String| BenchError::Patch(format!("patch #{} ({}): {msg}", n + 1, patch.id()));
            let inst = out
                .instances
                .iter_mut()
                .find(|i| i.id == patch.id())
                .ok_or_else(|| err("unknown instance".into()))?;
            match patch {
                Patch::RemoveItems { items, .. } => {
                    for name in items {
                        let before = inst.items.len();
                        inst.items.retain(|i| &i.name != name);
                        if inst.items.len() == before {
                            return Err(err(format!("item {name:?} is not in the manifest")));
                        }
                    }
                    if inst.items.is_empty() {
                        return Err(err("removal leaves no reproduction items".into()));
                    }
                }
                Patch::AlignScope { items, .. } => {
                    if items.is_empty() {
                        return Err(err("scope must keep at least one item".into()));
                    }
                    inst.items = items.clone();
                }
                Patch::Relabel {
                    ground_truth_score,
                    difficulty,
                    features,
                    ..
                } => {
                    if ground_truth_score.is_none() && difficulty.is_none() && features.is_none() {
                        return Err(err("relabel changes nothing".into()));
                    }
                    if let Some(s) = ground_truth_score {
                        inst.ground_truth_score = *s;
                    }
                    if difficulty.is_some() {
                        inst.difficulty = *difficulty;
                    }
                    if features.is_some() {
                        inst.features = *features;
                    }
                }
            }
        }
        out.validate()?;
        Ok(out)
    }
}
