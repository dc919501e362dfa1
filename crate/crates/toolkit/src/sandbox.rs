//! Path containment for tool calls.

use std::path::{Path, PathBuf};

use repro_core::paths;

use crate::error::ToolError;

/// Directories a run may touch. The package is read-only apart from
/// `_modified` copies and declared output directories; the workspace is
/// writable.
#[derive(Debug, Clone)]
pub struct Sandbox {
    package_root: PathBuf,
    workspace_root: PathBuf,
    extra_read: Vec<PathBuf>,
}

impl Sandbox {
    pub fn new(package_root: &Path, workspace_root: &Path) -> Self {
        Self {
            package_root: paths::resolve(Path::new("/"), &absolute(package_root)),
            workspace_root: paths::resolve(Path::new("/"), &absolute(workspace_root)),
            extra_read: Vec::new(),
        }
    }

    /// Grants read access to one more file or directory (the paper PDF).
    pub fn allow_read(mut self, path: &Path) -> Self {
        self.extra_read.push(paths::resolve(Path::new("/"), &absolute(path)));
        self
    }

    pub fn package_root(&self) -> &Path {
        &self.package_root
    }

    pub fn workspace_root(&self) -> &Path {
        &self.workspace_root
    }

    /// Relative paths resolve against the workspace first, then the package.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            return paths::resolve(Path::new("/"), path);
        }
        let in_workspace = paths::resolve(&self.workspace_root, path);
        if in_workspace.exists() {
            return in_workspace;
        }
        paths::resolve(&self.package_root, path)
    }

    pub fn readable(&self, path: &Path) -> Result<PathBuf, ToolError> {
        let resolved = self.resolve(path);
        let mut roots: Vec<&Path> = vec![&self.package_root, &self.workspace_root];
        roots.extend(self.extra_read.iter().map(PathBuf::as_path));
        if roots.iter().any(|root| resolved.starts_with(root)) {
            Ok(resolved)
        } else {
            Err(ToolError::OutsideSandbox(path.to_path_buf()))
        }
    }

    /// Workspace-only write access; the package tree is refused even when
    /// it sits inside the workspace.
    pub fn writable(&self, path: &Path) -> Result<PathBuf, ToolError> {
        let resolved = if path.is_absolute() {
            paths::resolve(Path::new("/"), path)
        } else {
            paths::resolve(&self.workspace_root, path)
        };
        if resolved.starts_with(&self.workspace_root) && !resolved.starts_with(&self.package_root) {
            Ok(resolved)
        } else {
            Err(ToolError::OutsideSandbox(path.to_path_buf()))
        }
    }

    pub fn in_package(&self, path: &Path) -> bool {
        path.starts_with(&self.package_root)
    }

    /// Package-relative form of `path` when it lies in the package.
    pub fn package_relative<'a>(&self, path: &'a Path) -> Option<&'a Path> {
        path.strip_prefix(&self.package_root).ok()
    }
}

fn absolute(path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        std::env::current_dir()
            .map(|cwd| cwd.join(path))
            .unwrap_or_else(|_| path.to_path_buf())
    }
}
