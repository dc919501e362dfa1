//! Lexical path helpers shared by validators and the tool sandbox.

use std::path::{Component, Path, PathBuf};

/// Collapses `.` and `..` without touching the filesystem.
pub fn normalize(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for component in path.components() {
        match component {
            Component::CurDir => {}
            Component::ParentDir => {
                if !out.pop() {
                    out.push("..");
                }
            }
            other => out.push(other.as_os_str()),
        }
    }
    out
}

/// Resolves `path` against `base` when relative, then normalizes.
/// Existing paths are canonicalized so symlinks cannot escape a root.
pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    let joined = if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    };
    let lexical = normalize(&joined);
    canonical_prefix(&lexical)
}

/// Canonicalizes the longest existing ancestor and re-appends the rest.
fn canonical_prefix(path: &Path) -> PathBuf {
    if let Ok(canonical) = path.canonicalize() {
        return canonical;
    }
    let mut tail = Vec::new();
    let mut cursor = path.to_path_buf();
    while let Some(name) = cursor.file_name().map(|n| n.to_os_string()) {
        tail.push(name);
        if !cursor.pop() {
            break;
        }
        if let Ok(mut canonical) = cursor.canonicalize() {
            for part in tail.iter().rev() {
                canonical.push(part);
            }
            return canonical;
        }
    }
    path.to_path_buf()
}

/// True when `path` lies inside any of `roots` (after resolution).
pub fn is_within(path: &Path, roots: &[&Path]) -> bool {
    roots.iter().any(|root| {
        let root = resolve(Path::new("/"), root);
        path.starts_with(&root)
    })
}
