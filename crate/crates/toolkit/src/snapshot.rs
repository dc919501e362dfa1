//! Byte-level package snapshots for the non-intrusion check.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::edit::is_modified_copy;

/// SHA-256 of every regular file under a root, keyed by relative path.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub files: BTreeMap<PathBuf, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Change {
    Added,
    Removed,
    Modified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intrusion {
    pub path: PathBuf,
    pub change: Change,
}

impl Snapshot {
    pub fn capture(root: &Path) -> std::io::Result<Self> {
        let mut files = BTreeMap::new();
        collect(root, root, &mut files)?;
        Ok(Self { files })
    }

    /// Hash over the sorted (path, digest) list.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for (path, digest) in &self.files {
            hasher.update(path.to_string_lossy().as_bytes());
            hasher.update([0]);
            hasher.update(digest.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }

    /// Changes from `self` to `after` that are not `_modified` copies or
    /// inside one of `output_dirs` (package-relative).
    pub fn intrusions(&self, after: &Snapshot, output_dirs: &[PathBuf]) -> Vec<Intrusion> {
        let allowed = |p: &Path| is_modified_copy(p) || output_dirs.iter().any(|d| p.starts_with(d));
        let mut out = Vec::new();
        for (path, digest) in &self.files {
            let change = match after.files.get(path) {
                None => Change::Removed,
                Some(d) if d != digest => Change::Modified,
                Some(_) => continue,
            };
            if !allowed(path) {
                out.push(Intrusion {
                    path: path.clone(),
                    change,
                });
            }
        }
        for path in after.files.keys() {
            if !self.files.contains_key(path) && !allowed(path) {
                out.push(Intrusion {
                    path: path.clone(),
                    change: Change::Added,
                });
            }
        }
        out.sort_by(|a, b| a.path.cmp(&b.path));
        out
    }
}

fn collect(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, String>) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        let kind = entry.file_type()?;
        if kind.is_dir() {
            collect(root, &path, out)?;
        } else if kind.is_file() || kind.is_symlink() {
            let bytes = if kind.is_symlink() {
                fs::read_link(&path)?.to_string_lossy().into_owned().into_bytes()
            } else {
                fs::read(&path)?
            };
            let rel = path.strip_prefix(root).unwrap_or(&path).to_path_buf();
            out.insert(rel, hex::encode(Sha256::digest(&bytes)));
        }
    }
    Ok(())
}
