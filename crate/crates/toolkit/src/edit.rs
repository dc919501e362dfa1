//! Content-addressed editing that never touches the original file.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::ToolError;
use crate::text::read_text;

pub const MODIFIED_SUFFIX: &str = "_modified";

/// `dir/name.ext` -> `dir/name_modified.ext`. A path that is already a
/// modified copy maps to itself.
pub fn modified_path(original: &Path) -> PathBuf {
    if is_modified_copy(original) {
        return original.to_path_buf();
    }
    let stem = original
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match original.extension() {
        Some(ext) => format!("{stem}{MODIFIED_SUFFIX}.{}", ext.to_string_lossy()),
        None => format!("{stem}{MODIFIED_SUFFIX}"),
    };
    original.with_file_name(name)
}

pub fn is_modified_copy(path: &Path) -> bool {
    path.file_stem()
        .is_some_and(|s| s.to_string_lossy().ends_with(MODIFIED_SUFFIX))
}

/// Replaces the single occurrence of `search` in the modified copy of
/// `original`, creating the copy from the original on first use.
pub fn edit_copy(original: &Path, search: &str, replace: &str) -> Result<PathBuf, ToolError> {
    if search.is_empty() {
        return Err(ToolError::InvalidArgument("search text must be nonempty".into()));
    }
    if !original.is_file() {
        return Err(ToolError::NotFound(original.to_path_buf()));
    }
    let target = modified_path(original);
    let source = if target.exists() { &target } else { original };
    let content = read_text(source)?;
    let count = occurrences(&content, search);
    match count {
        0 => Err(ToolError::NoMatch(source.to_path_buf())),
        1 => {
            let updated = content.replacen(search, replace, 1);
            fs::write(&target, updated).map_err(|e| ToolError::io(&target, e))?;
            Ok(target)
        }
        n => Err(ToolError::AmbiguousMatch {
            path: source.to_path_buf(),
            count: n,
        }),
    }
}

/// Counts occurrences of `needle`, overlapping ones included, so an anchor
/// like `aa` in `aaa` is reported as ambiguous.
pub fn occurrences(haystack: &str, needle: &str) -> usize {
    if needle.is_empty() {
        return 0;
    }
    haystack
        .char_indices()
        .filter(|(i, _)| haystack[*i..].starts_with(needle))
        .count()
}
