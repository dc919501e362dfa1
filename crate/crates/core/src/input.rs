use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::RESERVED_KEYS;

#[derive(Debug, Error, PartialEq)]
pub enum InputError {
    #[error("paper not found or not a file: {0}")]
    PaperMissing(PathBuf),
    #[error("package directory not found: {0}")]
    PackageMissing(PathBuf),
    #[error("no reproduction items given")]
    NoItems,
    #[error("reproduction item names must be nonempty")]
    EmptyItemName,
    #[error("duplicate reproduction item: {0}")]
    DuplicateItem(String),
    #[error("item name {0:?} collides with a reserved deliverable key")]
    ReservedItemName(String),
    #[error("budget must be nonnegative, got {0}")]
    NegativeBudget(Decimal),
    #[error("could not read items file {path}: {reason}")]
    ItemsFile { path: PathBuf, reason: String },
}

/// A named reported result (figure, table, finding) to be verified.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReproductionItem {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl ReproductionItem {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            description: None,
        }
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = Some(description.into());
        self
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ItemSpec {
    Name(String),
    Full(ReproductionItem),
}

/// Reads an items file: a JSON array of names or `{name, description}` records.
pub fn load_items(path: &Path) -> Result<Vec<ReproductionItem>, InputError> {
    let err = |reason: String| InputError::ItemsFile {
        path: path.to_path_buf(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let specs: Vec<ItemSpec> = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
    Ok(specs
        .into_iter()
        .map(|spec| match spec {
            ItemSpec::Name(name) => ReproductionItem::new(name),
            ItemSpec::Full(item) => item,
        })
        .collect())
}

/// The paper, package and items that seed one assessment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentInput {
    pub paper_path: PathBuf,
    pub package_root: PathBuf,
    pub items: Vec<ReproductionItem>,
    pub budget_usd: Decimal,
    pub workspace_root: PathBuf,
}

impl AssessmentInput {
    /// Checks the run-start invariants. A zero budget is accepted: the run
    /// then takes the emergency-score path without calling any model.
    pub fn validate(&self) -> Result<(), InputError> {
        if !self.paper_path.is_file() {
            return Err(InputError::PaperMissing(self.paper_path.clone()));
        }
        if !self.package_root.is_dir() {
            return Err(InputError::PackageMissing(self.package_root.clone()));
        }
        validate_items(&self.items)?;
        if self.budget_usd.is_sign_negative() && !self.budget_usd.is_zero() {
            return Err(InputError::NegativeBudget(self.budget_usd));
        }
        Ok(())
    }

    pub fn item_names(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|item| item.name.as_str())
    }

    pub fn has_item(&self, name: &str) -> bool {
        self.items.iter().any(|item| item.name == name)
    }
}

pub fn validate_items(items: &[ReproductionItem]) -> Result<(), InputError> {
    if items.is_empty() {
        return Err(InputError::NoItems);
    }
    let mut seen = BTreeSet::new();
    for item in items {
        if item.name.trim().is_empty() {
            return Err(InputError::EmptyItemName);
        }
        if RESERVED_KEYS.contains(&item.name.as_str()) {
            return Err(InputError::ReservedItemName(item.name.clone()));
        }
        if !seen.insert(item.name.as_str()) {
            return Err(InputError::DuplicateItem(item.name.clone()));
        }
    }
    Ok(())
}
