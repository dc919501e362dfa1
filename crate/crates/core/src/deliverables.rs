//! The persisted deliverables handed from stage to stage.
//!
//! Plan, execution summary and scoring summary share a flat JSON layout:
//! item names are top-level keys next to a few reserved scalar keys
//! (`score`, `code_quality_assessment`, ...). Serialization goes through
//! [`serde_json::Value`] to support that layout.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::json;
use crate::score::Score;

#[derive(Debug, Error)]
pub enum DeliverableError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
}

/// Read/write helpers shared by all deliverable types.
pub trait DeliverableFile: Serialize + DeserializeOwned + Sized {
    fn read_from(path: &Path) -> Result<Self, DeliverableError> {
        let text = std::fs::read_to_string(path).map_err(|source| DeliverableError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| DeliverableError::Malformed {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    fn write_to(&self, path: &Path) -> std::io::Result<()> {
        json::write_canonical(path, self)
    }
}

/// Reserved scalar keys, and the per-item entries keyed by item name.
type Flat<E> = (Map<String, Value>, BTreeMap<String, E>);

fn split_flat<E: DeserializeOwned>(value: Value, reserved: &[&str]) -> Result<Flat<E>, String> {
    let Value::Object(map) = value else {
        return Err("expected a JSON object".into());
    };
    let mut scalars = Map::new();
    let mut items = BTreeMap::new();
    for (key, value) in map {
        if reserved.contains(&key.as_str()) {
            scalars.insert(key, value);
        } else {
            let entry = serde_json::from_value(value).map_err(|e| format!("item {key:?}: {e}"))?;
            items.insert(key, entry);
        }
    }
    Ok((scalars, items))
}

fn take<T: DeserializeOwned>(scalars: &mut Map<String, Value>, key: &str) -> Result<Option<T>, String> {
    match scalars.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(value) => serde_json::from_value(value)
            .map(Some)
            .map_err(|e| format!("{key}: {e}")),
    }
}

fn flat_map<E: Serialize>(items: &BTreeMap<String, E>) -> Result<Map<String, Value>, serde_json::Error> {
    let mut map = Map::new();
    for (name, entry) in items {
        map.insert(name.clone(), serde_json::to_value(entry)?);
    }
    Ok(map)
}

// ---------------------------------------------------------------------------
// Reproduction plan

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    #[serde(default)]
    pub related_files: Vec<PathBuf>,
    /// Ordered run directives; each names exactly one script path.
    #[serde(default)]
    pub execution_steps: Vec<String>,
    /// Set when no entry point could be found for the item.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unplannable: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReproductionPlan {
    pub setup_script: Option<PathBuf>,
    pub items: BTreeMap<String, PlanEntry>,
}

impl ReproductionPlan {
    /// A plan that marks every item unplannable, used when the setup stage
    /// produced nothing usable.
    pub fn all_unplannable<'a>(items: impl IntoIterator<Item = &'a str>, reason: &str) -> Self {
        Self {
            setup_script: None,
            items: items
                .into_iter()
                .map(|name| {
                    (
                        name.to_string(),
                        PlanEntry {
                            unplannable: Some(reason.to_string()),
                            ..PlanEntry::default()
                        },
                    )
                })
                .collect(),
        }
    }
}

impl Serialize for ReproductionPlan {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = flat_map(&self.items).map_err(serde::ser::Error::custom)?;
        if let Some(script) = &self.setup_script {
            map.insert("setup_script".into(), Value::String(script.display().to_string()));
        }
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ReproductionPlan {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        let (mut scalars, items) = split_flat(value, &["setup_script"]).map_err(serde::de::Error::custom)?;
        let setup_script = take(&mut scalars, "setup_script").map_err(serde::de::Error::custom)?;
        Ok(Self { setup_script, items })
    }
}

impl DeliverableFile for ReproductionPlan {}

// ---------------------------------------------------------------------------
// Execution summary

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeQuality {
    NoErrors,
    MinorErrors,
    MajorErrors,
}

impl fmt::Display for CodeQuality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodeQuality::NoErrors => "no_errors",
            CodeQuality::MinorErrors => "minor_errors",
            CodeQuality::MajorErrors => "major_errors",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemExecution {
    #[serde(default)]
    pub original_files: Vec<PathBuf>,
    #[serde(default)]
    pub modified_files: Vec<PathBuf>,
    #[serde(default)]
    pub modifications: Vec<String>,
    #[serde(default)]
    pub output_files: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionSummary {
    pub code_quality_assessment: CodeQuality,
    pub reason: String,
    pub items: BTreeMap<String, ItemExecution>,
}

impl ExecutionSummary {
    /// Summary recorded when the execution stage could not produce one.
    pub fn stage_failed<'a>(items: impl IntoIterator<Item = &'a str>, diagnostics: &str) -> Self {
        Self {
            code_quality_assessment: CodeQuality::MajorErrors,
            reason: format!(
                "The execution stage did not complete, so no outputs were reproduced and code quality was not inspected. Diagnostics: {diagnostics}"
            ),
            items: items
                .into_iter()
                .map(|name| (name.to_string(), ItemExecution::default()))
                .collect(),
        }
    }

    /// Every reproduced artifact cited by the summary, tagged with its item.
    pub fn artifacts(&self) -> Vec<ReproducedArtifact> {
        self.items
            .iter()
            .flat_map(|(name, item)| {
                item.output_files
                    .iter()
                    .map(move |path| ReproducedArtifact::new(name, path))
            })
            .collect()
    }
}

impl Serialize for ExecutionSummary {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = flat_map(&self.items).map_err(serde::ser::Error::custom)?;
        map.insert(
            "code_quality_assessment".into(),
            serde_json::to_value(self.code_quality_assessment).map_err(serde::ser::Error::custom)?,
        );
        map.insert("reason".into(), Value::String(self.reason.clone()));
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExecutionSummary {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let value = Value::deserialize(deserializer)?;
        let (mut scalars, items) =
            split_flat(value, &["code_quality_assessment", "reason"]).map_err(D::Error::custom)?;
        let code_quality_assessment = take(&mut scalars, "code_quality_assessment")
            .map_err(D::Error::custom)?
            .ok_or_else(|| D::Error::missing_field("code_quality_assessment"))?;
        let reason = take(&mut scalars, "reason")
            .map_err(D::Error::custom)?
            .unwrap_or_default();
        Ok(Self {
            code_quality_assessment,
            reason,
            items,
        })
    }
}

impl DeliverableFile for ExecutionSummary {}

// ---------------------------------------------------------------------------
// Reproduced artifacts

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Image,
    TableFile,
    LogExcerpt,
    DataFile,
    Document,
}

impl ArtifactKind {
    pub fn from_path(path: &Path) -> Self {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        match ext.as_str() {
            "png" | "jpg" | "jpeg" | "gif" | "svg" | "eps" | "tif" | "tiff" => ArtifactKind::Image,
            "csv" | "tsv" | "xlsx" | "xls" | "tex" => ArtifactKind::TableFile,
            "log" | "txt" | "smcl" | "out" => ArtifactKind::LogExcerpt,
            "pdf" | "html" | "md" | "docx" => ArtifactKind::Document,
            _ => ArtifactKind::DataFile,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReproducedArtifact {
    pub item_name: String,
    pub path: PathBuf,
    pub kind: ArtifactKind,
    #[serde(default)]
    pub missing: bool,
}

impl ReproducedArtifact {
    pub fn new(item_name: &str, path: &Path) -> Self {
        Self {
            item_name: item_name.to_string(),
            path: path.to_path_buf(),
            kind: ArtifactKind::from_path(path),
            missing: !path.exists(),
        }
    }
}

// ---------------------------------------------------------------------------
// Scoring summary

/// Per-item verdict recorded next to the free-text evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Consistency {
    ExactMatch,
    PresentationDifference,
    Inconsistent,
    Missing,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemScoring {
    #[serde(default)]
    pub original_item: Option<PathBuf>,
    #[serde(default)]
    pub reproduced_outputs: Vec<PathBuf>,
    #[serde(default)]
    pub evaluation_summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<Consistency>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoringSummary {
    pub score: Score,
    /// True when the score was emitted by the emergency path rather than
    /// by an assessment.
    pub assessment_incomplete: bool,
    pub items: BTreeMap<String, ItemScoring>,
}

impl ScoringSummary {
    /// Score 1 with the failure recorded against every item.
    pub fn emergency<'a>(items: impl IntoIterator<Item = &'a str>, reason: &str) -> Self {
        Self {
            score: Score::IRREPRODUCIBLE,
            assessment_incomplete: true,
            items: items
                .into_iter()
                .map(|name| {
                    (
                        name.to_string(),
                        ItemScoring {
                            original_item: None,
                            reproduced_outputs: Vec::new(),
                            evaluation_summary: format!("Assessment incomplete: {reason}"),
                            consistency: Some(Consistency::Missing),
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn all_exact_match(&self) -> bool {
        !self.items.is_empty()
            && self
                .items
                .values()
                .all(|item| item.consistency == Some(Consistency::ExactMatch))
    }
}

impl Serialize for ScoringSummary {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = flat_map(&self.items).map_err(serde::ser::Error::custom)?;
        map.insert("score".into(), Value::from(self.score.get()));
        if self.assessment_incomplete {
            map.insert("assessment_incomplete".into(), Value::Bool(true));
        }
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ScoringSummary {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let value = Value::deserialize(deserializer)?;
        let (mut scalars, items) = split_flat(value, &["score", "assessment_incomplete"]).map_err(D::Error::custom)?;
        let score = take(&mut scalars, "score")
            .map_err(D::Error::custom)?
            .ok_or_else(|| D::Error::missing_field("score"))?;
        let assessment_incomplete = take(&mut scalars, "assessment_incomplete")
            .map_err(D::Error::custom)?
            .unwrap_or(false);
        Ok(Self {
            score,
            assessment_incomplete,
            items,
        })
    }
}

impl DeliverableFile for ScoringSummary {}
