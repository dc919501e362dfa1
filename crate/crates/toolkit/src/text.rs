//! Text viewing helpers: log truncation, paginated reads, directory trees.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::ToolError;

/// Keeps the first `head` and last `tail` lines of `text`, replacing the
/// middle with a single marker line. Kept lines are byte-exact.
pub fn truncate_log(text: &str, head: usize, tail: usize) -> String {
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    if lines.len() <= head + tail {
        return text.to_string();
    }
    let omitted = lines.len() - head - tail;
    let mut out = String::with_capacity(text.len().min(1 << 16));
    for line in &lines[..head] {
        out.push_str(line);
    }
    out.push_str(&format!("... [{omitted} lines omitted] ...\n"));
    for line in &lines[lines.len() - tail..] {
        out.push_str(line);
    }
    out
}

/// Caps `text` at `cap` characters by eliding the middle.
/// Returns the capped text and whether anything was removed.
pub fn cap_chars(text: &str, cap: usize) -> (String, bool) {
    let total = text.chars().count();
    if total <= cap {
        return (text.to_string(), false);
    }
    let marker = format!("\n... [{} characters elided] ...\n", total.saturating_sub(cap));
    let budget = cap.saturating_sub(marker.chars().count());
    let head_len = budget / 2;
    let tail_len = budget - head_len;
    let head: String = text.chars().take(head_len).collect();
    let tail: String = text.chars().skip(total - tail_len).collect();
    let mut out = head;
    out.push_str(&marker);
    out.push_str(&tail);
    if out.chars().count() > cap {
        out = out.chars().take(cap).collect();
    }
    (out, true)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Page {
    pub text: String,
    /// 1-based number of the first returned line; 0 for an empty slice.
    pub first_line: usize,
    pub line_count: usize,
    pub total_lines: usize,
    pub eof: bool,
}

/// Loads a file as UTF-8 text, refusing binaries.
pub fn read_text(path: &Path) -> Result<String, ToolError> {
    let bytes = fs::read(path).map_err(|e| ToolError::io(path, e))?;
    if looks_binary(&bytes) {
        return Err(ToolError::BinaryFile(path.to_path_buf()));
    }
    String::from_utf8(bytes).map_err(|_| ToolError::BinaryFile(path.to_path_buf()))
}

fn looks_binary(bytes: &[u8]) -> bool {
    bytes[..bytes.len().min(8192)].contains(&0)
}

/// Lines `[offset, offset + limit)` of the file, line endings intact.
pub fn read_paginated(path: &Path, offset: usize, limit: usize) -> Result<Page, ToolError> {
    if limit == 0 {
        return Err(ToolError::InvalidArgument("limit_lines must be positive".into()));
    }
    if path.is_dir() {
        return Err(ToolError::InvalidArgument(format!(
            "{} is a directory; use inspect_dir",
            path.display()
        )));
    }
    let text = read_text(path)?;
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    let total = lines.len();
    let start = offset.min(total);
    let end = offset.saturating_add(limit).min(total);
    Ok(Page {
        text: lines[start..end].concat(),
        first_line: if end > start { start + 1 } else { 0 },
        line_count: end - start,
        total_lines: total,
        eof: end >= total,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirListing {
    pub text: String,
    pub entries: usize,
    pub truncated: bool,
}

/// Tree listing with sizes, sorted by name at every level. `depth` 1 lists
/// direct children only.
pub fn inspect_dir(root: &Path, depth: usize, cap: usize) -> Result<DirListing, ToolError> {
    let meta = fs::metadata(root).map_err(|e| ToolError::io(root, e))?;
    if !meta.is_dir() {
        return Err(ToolError::InvalidArgument(format!(
            "{} is not a directory",
            root.display()
        )));
    }
    let mut walker = Walker {
        lines: Vec::new(),
        cap,
        elided: 0,
    };
    walker.walk(root, 0, depth.max(1))?;
    let entries = walker.lines.len();
    let truncated = walker.elided > 0;
    let mut text = format!("{}/\n", root.display());
    for line in &walker.lines {
        text.push_str(line);
        text.push('\n');
    }
    if truncated {
        text.push_str(&format!("... [{} more entries elided]\n", walker.elided));
    }
    Ok(DirListing {
        text,
        entries,
        truncated,
    })
}

struct Walker {
    lines: Vec<String>,
    cap: usize,
    elided: usize,
}

impl Walker {
    fn walk(&mut self, dir: &Path, level: usize, depth: usize) -> Result<(), ToolError> {
        let mut children: Vec<(String, PathBuf)> = fs::read_dir(dir)
            .map_err(|e| ToolError::io(dir, e))?
            .filter_map(Result::ok)
            .map(|e| (e.file_name().to_string_lossy().into_owned(), e.path()))
            .collect();
        children.sort();
        let indent = "  ".repeat(level + 1);
        for (name, path) in children {
            if self.lines.len() >= self.cap {
                self.elided += 1;
                continue;
            }
            let meta = match fs::symlink_metadata(&path) {
                Ok(m) => m,
                Err(_) => continue,
            };
            if meta.is_dir() {
                self.lines.push(format!("{indent}{name}/"));
                if level + 1 < depth {
                    self.walk(&path, level + 1, depth)?;
                }
            } else if meta.file_type().is_symlink() {
                self.lines.push(format!("{indent}{name} -> (symlink)"));
            } else {
                self.lines.push(format!("{indent}{name} ({})", human_size(meta.len())));
            }
        }
        Ok(())
    }
}

fn human_size(bytes: u64) -> String {
    const UNITS: [&str; 4] = ["KB", "MB", "GB", "TB"];
    if bytes < 1024 {
        return format!("{bytes} B");
    }
    let mut value = bytes as f64 / 1024.0;
    let mut unit = 0;
    while value >= 1024.0 && unit < UNITS.len() - 1 {
        value /= 1024.0;
        unit += 1;
    }
    format!("{value:.1} {}", UNITS[unit])
}
