//! The tool surface exposed to agents: specs plus JSON-argument dispatch.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use regex::Regex;
use repro_core::llm::{ImageAttachment, ParamKind, ToolSpec};
use serde_json::Value;

use crate::config::ToolConfig;
use crate::convert;
use crate::edit;
use crate::error::ToolError;
use crate::pdf;
use crate::runner::{self, Interpreter, RunContext, RunOutcome, RunRecord, RunnerMode};
use crate::sandbox::Sandbox;
use crate::text::{self, cap_chars, truncate_log};

pub mod names {
    pub const READ_FILE: &str = "read_file";
    pub const WRITE_FILE: &str = "write_file";
    pub const INSPECT_DIR: &str = "inspect_dir";
    pub const RUN_BASH: &str = "run_bash";
    pub const INSTALL_DEPS: &str = "install_deps";
    pub const RUN_SCRIPT: &str = "run_script";
    pub const EDIT_COPY: &str = "edit_copy";
    pub const READ_FILE_PAGINATED: &str = "read_file_paginated";
    pub const EXTRACT_ELEMENTS: &str = "extract_elements";
    pub const VIEW_IMAGE: &str = "view_image";
    pub const CONVERT_TO_IMAGE: &str = "convert_to_image";
    pub const RENDER_REPORT_PDF: &str = "render_report_pdf";

    pub const ALL: &[&str] = &[
        READ_FILE,
        WRITE_FILE,
        INSPECT_DIR,
        RUN_BASH,
        INSTALL_DEPS,
        RUN_SCRIPT,
        EDIT_COPY,
        READ_FILE_PAGINATED,
        EXTRACT_ELEMENTS,
        VIEW_IMAGE,
        CONVERT_TO_IMAGE,
        RENDER_REPORT_PDF,
    ];
}

/// Workspace subdirectories used by the tools.
pub mod layout {
    pub const LOGS: &str = "logs";
    pub const ELEMENTS: &str = "elements";
    pub const ARTIFACTS: &str = "artifacts";
    pub const CONVERTED: &str = "artifacts/converted";
    pub const ENV_PREFIX: &str = "env";
    pub const SETUP: &str = "setup";
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Text(String),
    Paths(Vec<PathBuf>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolResult {
    pub ok: bool,
    pub payload: Payload,
    pub truncated: bool,
}

impl ToolResult {
    fn text(ok: bool, body: String, cap: usize) -> Self {
        let (body, truncated) = cap_chars(&body, cap);
        Self {
            ok,
            payload: Payload::Text(body),
            truncated,
        }
    }

    fn paths(paths: Vec<PathBuf>, cap: usize) -> Self {
        let mut kept = Vec::new();
        let mut used = 0;
        let mut truncated = false;
        for p in paths {
            let len = p.to_string_lossy().chars().count() + 1;
            if used + len > cap {
                truncated = true;
                break;
            }
            used += len;
            kept.push(p);
        }
        Self {
            ok: true,
            payload: Payload::Paths(kept),
            truncated,
        }
    }

    /// Body of the tool-result message shown to the model.
    pub fn render(&self) -> String {
        match &self.payload {
            Payload::Text(t) => t.clone(),
            Payload::Paths(paths) => {
                let mut out = String::new();
                for p in paths {
                    out.push_str(&p.to_string_lossy());
                    out.push('\n');
                }
                if self.truncated {
                    out.push_str("... [further paths elided]\n");
                }
                out
            }
        }
    }

    pub fn payload_chars(&self) -> usize {
        match &self.payload {
            Payload::Text(t) => t.chars().count(),
            Payload::Paths(p) => p.iter().map(|p| p.to_string_lossy().chars().count() + 1).sum(),
        }
    }
}

/// What one dispatched call produced.
#[derive(Debug, Clone)]
pub struct ToolOutput {
    pub result: ToolResult,
    pub images: Vec<ImageAttachment>,
    pub run: Option<RunRecord>,
    /// Error code when the call failed before producing a result.
    pub error: Option<&'static str>,
}

impl ToolOutput {
    fn ok(result: ToolResult) -> Self {
        Self {
            result,
            images: Vec::new(),
            run: None,
            error: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Toolkit {
    pub sandbox: Sandbox,
    pub config: ToolConfig,
    pub mode: RunnerMode,
    pub multimodal: bool,
    denylist: Vec<Regex>,
}

impl Toolkit {
    pub fn new(sandbox: Sandbox, config: ToolConfig) -> Result<Self, ToolError> {
        let denylist = config
            .denylist
            .iter()
            .map(|p| Regex::new(p).map_err(|e| ToolError::InvalidArgument(format!("denylist `{p}`: {e}"))))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            sandbox,
            config,
            mode: RunnerMode::Real,
            multimodal: true,
            denylist,
        })
    }

    pub fn with_runner(mut self, mode: RunnerMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_multimodal(mut self, multimodal: bool) -> Self {
        self.multimodal = multimodal;
        self
    }

    pub fn workspace_dir(&self, sub: &str) -> PathBuf {
        self.sandbox.workspace_root().join(sub)
    }

    /// Environment shared by every subprocess of the run.
    pub fn env(&self) -> Vec<(String, String)> {
        let prefix = self.workspace_dir(layout::ENV_PREFIX);
        let py = prefix.join("python");
        let join = |first: &Path, var: &str| match std::env::var(var) {
            Ok(rest) if !rest.is_empty() => format!("{}:{rest}", first.display()),
            _ => first.display().to_string(),
        };
        vec![
            ("REPRO_ENV_PREFIX".into(), prefix.display().to_string()),
            (
                "REPRO_PACKAGE_ROOT".into(),
                self.sandbox.package_root().display().to_string(),
            ),
            (
                "REPRO_WORKSPACE".into(),
                self.sandbox.workspace_root().display().to_string(),
            ),
            (
                "REPRO_OUTPUT_DIR".into(),
                self.workspace_dir(layout::ARTIFACTS).display().to_string(),
            ),
            ("PIP_TARGET".into(), py.display().to_string()),
            ("PYTHONPATH".into(), join(&py, "PYTHONPATH")),
            ("PIP_DISABLE_PIP_VERSION_CHECK".into(), "1".into()),
            ("R_LIBS_USER".into(), prefix.join("R").display().to_string()),
            ("PATH".into(), join(&prefix.join("bin"), "PATH")),
            ("MPLBACKEND".into(), "Agg".into()),
            ("PYTHONDONTWRITEBYTECODE".into(), "1".into()),
        ]
    }

    fn ctx<'a>(&'a self, logs: &'a Path, env: &'a [(String, String)]) -> RunContext<'a> {
        RunContext {
            logs_dir: logs,
            env,
            interpreters: &self.config.interpreters,
            wrapper: &self.config.command_wrapper,
            mode: &self.mode,
        }
    }

    pub fn read_file(&self, path: &Path) -> Result<String, ToolError> {
        let p = self.sandbox.readable(path)?;
        text::read_text(&p)
    }

    pub fn read_file_paginated(&self, path: &Path, offset: usize, limit: usize) -> Result<text::Page, ToolError> {
        let p = self.sandbox.readable(path)?;
        text::read_paginated(&p, offset, limit)
    }

    pub fn inspect_dir(&self, path: &Path, depth: usize) -> Result<text::DirListing, ToolError> {
        let p = self.sandbox.readable(path)?;
        text::inspect_dir(&p, depth, self.config.dir_entry_cap)
    }

    pub fn write_file(&self, path: &Path, content: &str) -> Result<PathBuf, ToolError> {
        let p = self.sandbox.writable(path)?;
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| ToolError::io(parent, e))?;
        }
        fs::write(&p, content).map_err(|e| ToolError::io(&p, e))?;
        Ok(p)
    }

    pub fn edit_copy(&self, original: &Path, search: &str, replace: &str) -> Result<PathBuf, ToolError> {
        let p = self.sandbox.readable(original)?;
        let target = edit::modified_path(&p);
        let in_roots =
            target.starts_with(self.sandbox.package_root()) || target.starts_with(self.sandbox.workspace_root());
        if !in_roots {
            return Err(ToolError::OutsideSandbox(original.to_path_buf()));
        }
        edit::edit_copy(&p, search, replace)
    }

    fn check_denylist(&self, command: &str) -> Result<(), ToolError> {
        match self.denylist.iter().find(|re| re.is_match(command)) {
            Some(re) => Err(ToolError::SandboxViolation(re.as_str().to_string())),
            None => Ok(()),
        }
    }

    pub fn run_bash(
        &self,
        command: &str,
        timeout: Option<Duration>,
        cwd: Option<&Path>,
    ) -> Result<RunOutcome, ToolError> {
        if command.trim().is_empty() {
            return Err(ToolError::InvalidArgument("command must be nonempty".into()));
        }
        self.check_denylist(command)?;
        let cwd = match cwd {
            Some(c) => self.sandbox.readable(c)?,
            None => self.sandbox.workspace_root().to_path_buf(),
        };
        let logs = self.workspace_dir(layout::LOGS);
        let env = self.env();
        runner::run_bash(
            &self.ctx(&logs, &env),
            command,
            &cwd,
            timeout.unwrap_or(self.config.bash_timeout),
        )
    }

    pub fn run_script(
        &self,
        script: &Path,
        args: &[String],
        timeout: Option<Duration>,
        interpreter: Option<Interpreter>,
        cwd: Option<&Path>,
    ) -> Result<RunOutcome, ToolError> {
        let path = self.sandbox.readable(script)?;
        let interpreter = match interpreter {
            Some(i) => i,
            None => Interpreter::for_script(&path)?,
        };
        let mut keys = vec![
            script.to_string_lossy().into_owned(),
            path.to_string_lossy().into_owned(),
        ];
        if let Some(rel) = self.sandbox.package_relative(&path) {
            keys.push(rel.to_string_lossy().into_owned());
        }
        if let Some(name) = path.file_name() {
            keys.push(name.to_string_lossy().into_owned());
        }
        if matches!(self.mode, RunnerMode::Real) && !path.is_file() {
            return Err(ToolError::NotFound(script.to_path_buf()));
        }
        let cwd = match cwd {
            Some(c) => self.sandbox.readable(c)?,
            None => path
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| self.sandbox.package_root().to_path_buf()),
        };
        let logs = self.workspace_dir(layout::LOGS);
        let env = self.env();
        runner::run_script(
            &self.ctx(&logs, &env),
            &path,
            interpreter,
            args,
            &cwd,
            timeout.unwrap_or(self.config.script_timeout),
            &keys,
        )
    }

    /// Writes the consolidated install script into the workspace and runs
    /// it against the run's environment prefix.
    pub fn install_deps(&self, script: &str, language: Interpreter) -> Result<RunOutcome, ToolError> {
        let ext = match language {
            Interpreter::Python => "py",
            Interpreter::Shell => "sh",
            Interpreter::R => "R",
            other => {
                return Err(ToolError::InvalidArgument(format!(
                    "install scripts must be shell, python or r, not {other}"
                )))
            }
        };
        if language == Interpreter::Shell {
            self.check_denylist(script)?;
        }
        let path = self.write_file(&Path::new(layout::SETUP).join(format!("install_deps.{ext}")), script)?;
        for sub in ["python", "R", "bin"] {
            let dir = self.workspace_dir(layout::ENV_PREFIX).join(sub);
            fs::create_dir_all(&dir).map_err(|e| ToolError::io(&dir, e))?;
        }
        let logs = self.workspace_dir(layout::LOGS);
        let env = self.env();
        let real = RunnerMode::Real;
        let mode = match &self.mode {
            RunnerMode::Mock(m) if m.lookup(&["install_deps".into()]).is_some() => &self.mode,
            _ => &real,
        };
        let ctx = RunContext {
            mode,
            ..self.ctx(&logs, &env)
        };
        let outcome = runner::run_script(
            &ctx,
            &path,
            language,
            &[],
            self.sandbox.workspace_root(),
            self.config.install_timeout,
            &["install_deps".into()],
        )?;
        if outcome.record.exit_code != 0 {
            return Err(ToolError::NonzeroExit {
                record: Box::new(outcome.record),
            });
        }
        Ok(outcome)
    }

    pub fn extract_elements(&self, pdf_path: &Path) -> Result<pdf::extract::ElementManifest, ToolError> {
        let p = self.sandbox.readable(pdf_path)?;
        pdf::extract::extract_elements(&p, &self.workspace_dir(layout::ELEMENTS), self.config.render_dpi)
    }

    pub fn convert_to_image(&self, artifact: &Path) -> Result<Vec<PathBuf>, ToolError> {
        let p = self.sandbox.readable(artifact)?;
        convert::convert_to_image(&p, &self.workspace_dir(layout::CONVERTED), self.config.render_dpi)
    }

    pub fn view_image(&self, path: &Path) -> Result<ImageAttachment, ToolError> {
        if !self.multimodal {
            return Err(ToolError::NotMultimodal);
        }
        let p = self.sandbox.readable(path)?;
        let viewed = convert::load_for_view(&p, self.config.image_max_dim)?;
        Ok(ImageAttachment {
            media_type: "image/png".into(),
            data_base64: viewed.png_base64,
            width: viewed.width,
            height: viewed.height,
            source: Some(p),
        })
    }

    pub fn render_report_pdf(&self, markdown: &Path, out_pdf: &Path) -> Result<PathBuf, ToolError> {
        let md_path = self.sandbox.readable(markdown)?;
        let out = self.sandbox.writable(out_pdf)?;
        let bytes = fs::read(&md_path).map_err(|e| ToolError::io(&md_path, e))?;
        let text = String::from_utf8(bytes)
            .map_err(|_| ToolError::RenderFailure(format!("{} is not valid UTF-8", md_path.display())))?;
        pdf::writer::markdown_to_pdf(&text, md_path.parent()).save(&out)?;
        Ok(out)
    }

    /// Specs for the named tools, in the given order.
    pub fn specs(tools: &[&str]) -> Vec<ToolSpec> {
        tools.iter().filter_map(|n| spec(n)).collect()
    }

    /// Executes a tool call. Failures become `ok=false` results so the
    /// agent can react; they never abort the run.
    pub fn call(&self, name: &str, args: &Value) -> ToolOutput {
        let cap = self.config.result_cap_chars;
        match self.dispatch(name, args) {
            Ok(out) => out,
            Err(err) => {
                let mut body = format!("error[{}]: {err}\n", err.code());
                let mut run = None;
                match &err {
                    ToolError::Timeout { record, .. } | ToolError::NonzeroExit { record } => {
                        body.push_str(&self.log_view(&record.log_path));
                        run = Some((**record).clone());
                    }
                    ToolError::InterpreterMissing { .. } => {
                        body.push_str("This is an environment gap, not a fault in the package.\n");
                    }
                    _ => {}
                }
                ToolOutput {
                    result: ToolResult::text(false, body, cap),
                    images: Vec::new(),
                    run,
                    error: Some(err.code()),
                }
            }
        }
    }

    fn log_view(&self, log: &Path) -> String {
        let text = fs::read(log)
            .map(|b| String::from_utf8_lossy(&b).into_owned())
            .unwrap_or_default();
        format!(
            "--- log {} ---\n{}",
            log.display(),
            truncate_log(&text, self.config.log_head_lines, self.config.log_tail_lines)
        )
    }

    fn run_view(&self, outcome: &RunOutcome) -> String {
        let r = &outcome.record;
        let head = self.config.log_head_lines;
        let tail = self.config.log_tail_lines;
        let mut body = format!(
            "exit_code: {}\ntimed_out: {}\nduration_s: {:.2}\nlog: {}\n",
            r.exit_code,
            r.timed_out,
            r.duration_secs,
            r.log_path.display()
        );
        if outcome.mocked {
            body.push_str("mode: mock\n");
        }
        body.push_str("--- stdout ---\n");
        body.push_str(&truncate_log(&outcome.stdout, head, tail));
        if !outcome.stderr.is_empty() {
            body.push_str("\n--- stderr ---\n");
            body.push_str(&truncate_log(&outcome.stderr, head, tail));
        }
        body
    }

    fn dispatch(&self, name: &str, args: &Value) -> Result<ToolOutput, ToolError> {
        let cap = self.config.result_cap_chars;
        let spec = spec(name).ok_or_else(|| ToolError::UnknownTool(name.to_string()))?;
        spec.check_arguments(args).map_err(ToolError::InvalidArgument)?;
        let a = Args(args);
        let text_ok = |body: String| Ok(ToolOutput::ok(ToolResult::text(true, body, cap)));
        match name {
            names::READ_FILE => {
                let content = self.read_file(&a.path("path")?)?;
                text_ok(content)
            }
            names::READ_FILE_PAGINATED => {
                let offset = a.uint("offset_lines")?.unwrap_or(0);
                let limit = a.uint("limit_lines")?.unwrap_or(self.config.default_page_lines);
                let page = self.read_file_paginated(&a.path("path")?, offset, limit)?;
                let header = if page.line_count == 0 {
                    format!(
                        "[no lines at offset {offset}; file has {} lines; eof=true]\n",
                        page.total_lines
                    )
                } else {
                    format!(
                        "[lines {}-{} of {}; eof={}]\n",
                        page.first_line,
                        page.first_line + page.line_count - 1,
                        page.total_lines,
                        page.eof
                    )
                };
                text_ok(header + &page.text)
            }
            names::INSPECT_DIR => {
                let depth = a.uint("depth")?.unwrap_or(2);
                let listing = self.inspect_dir(&a.path("path")?, depth)?;
                let mut result = ToolResult::text(true, listing.text, cap);
                result.truncated |= listing.truncated;
                Ok(ToolOutput::ok(result))
            }
            names::WRITE_FILE => {
                let p = self.write_file(&a.path("path")?, a.str("content")?)?;
                text_ok(format!("wrote {}\n", p.display()))
            }
            names::EDIT_COPY => {
                let p = self.edit_copy(&a.path("path")?, a.str("search")?, a.str("replace")?)?;
                text_ok(format!("edited copy: {}\n", p.display()))
            }
            names::RUN_BASH => {
                let timeout = a.uint("timeout_s")?.map(|s| Duration::from_secs(s as u64));
                let cwd = a.opt_path("cwd");
                let outcome = self.run_bash(a.str("command")?, timeout, cwd.as_deref())?;
                let ok = outcome.record.exit_code == 0;
                Ok(ToolOutput {
                    result: ToolResult::text(ok, self.run_view(&outcome), cap),
                    images: Vec::new(),
                    run: Some(outcome.record),
                    error: None,
                })
            }
            names::RUN_SCRIPT => {
                let timeout = a.uint("timeout_s")?.map(|s| Duration::from_secs(s as u64));
                let interpreter = match a.opt_str("interpreter") {
                    Some(name) => Some(
                        Interpreter::parse(name)
                            .ok_or_else(|| ToolError::InvalidArgument(format!("unknown interpreter `{name}`")))?,
                    ),
                    None => None,
                };
                let cwd = a.opt_path("cwd");
                let outcome = self.run_script(
                    &a.path("script_path")?,
                    &a.strings("args"),
                    timeout,
                    interpreter,
                    cwd.as_deref(),
                )?;
                let ok = outcome.record.exit_code == 0;
                Ok(ToolOutput {
                    result: ToolResult::text(ok, self.run_view(&outcome), cap),
                    images: Vec::new(),
                    run: Some(outcome.record),
                    error: None,
                })
            }
            names::INSTALL_DEPS => {
                let language = match a.opt_str("language") {
                    Some(l) => Interpreter::parse(l)
                        .ok_or_else(|| ToolError::InvalidArgument(format!("unknown language `{l}`")))?,
                    None => Interpreter::Shell,
                };
                let outcome = self.install_deps(a.str("script")?, language)?;
                Ok(ToolOutput {
                    result: ToolResult::text(true, self.run_view(&outcome), cap),
                    images: Vec::new(),
                    run: Some(outcome.record),
                    error: None,
                })
            }
            names::EXTRACT_ELEMENTS => {
                let m = self.extract_elements(&a.path("pdf_path")?)?;
                let mut result = ToolResult::paths(m.elements.into_iter().map(|e| e.path).collect(), cap);
                if !m.skipped.is_empty() {
                    let mut body = result.render();
                    body.push_str(&format!("skipped {} undecodable images\n", m.skipped.len()));
                    let truncated = result.truncated;
                    result = ToolResult::text(true, body, cap);
                    result.truncated |= truncated;
                }
                Ok(ToolOutput::ok(result))
            }
            names::CONVERT_TO_IMAGE => {
                let paths = self.convert_to_image(&a.path("path")?)?;
                Ok(ToolOutput::ok(ToolResult::paths(paths, cap)))
            }
            names::VIEW_IMAGE => {
                let image = self.view_image(&a.path("path")?)?;
                let body = format!(
                    "attached {} ({}x{})\n",
                    image.source.as_deref().unwrap_or(Path::new("")).display(),
                    image.width,
                    image.height
                );
                Ok(ToolOutput {
                    result: ToolResult::text(true, body, cap),
                    images: vec![image],
                    run: None,
                    error: None,
                })
            }
            names::RENDER_REPORT_PDF => {
                let out = self.render_report_pdf(&a.path("markdown_path")?, &a.path("out_pdf")?)?;
                text_ok(format!("rendered {}\n", out.display()))
            }
            other => Err(ToolError::UnknownTool(other.to_string())),
        }
    }
}

struct Args<'a>(&'a Value);

impl Args<'_> {
    fn str(&self, key: &str) -> Result<&str, ToolError> {
        self.0
            .get(key)
            .and_then(Value::as_str)
            .ok_or_else(|| ToolError::InvalidArgument(format!("missing `{key}`")))
    }

    fn opt_str(&self, key: &str) -> Option<&str> {
        self.0.get(key).and_then(Value::as_str)
    }

    fn path(&self, key: &str) -> Result<PathBuf, ToolError> {
        self.str(key).map(PathBuf::from)
    }

    fn opt_path(&self, key: &str) -> Option<PathBuf> {
        self.opt_str(key).map(PathBuf::from)
    }

    fn uint(&self, key: &str) -> Result<Option<usize>, ToolError> {
        match self.0.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v
                .as_u64()
                .map(|n| Some(n as usize))
                .ok_or_else(|| ToolError::InvalidArgument(format!("`{key}` must be a non-negative integer"))),
        }
    }

    fn strings(&self, key: &str) -> Vec<String> {
        self.0
            .get(key)
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(|v| v.as_str().map(str::to_string)).collect())
            .unwrap_or_default()
    }
}

/// Schema for one tool by name.
pub fn spec(name: &str) -> Option<ToolSpec> {
    use ParamKind::*;
    let s = match name {
        names::READ_FILE => ToolSpec::new(name, "Read a whole text file from the package or workspace.")
            .param("path", String, true, "File path; relative paths resolve against the workspace, then the package."),
        names::WRITE_FILE => ToolSpec::new(name, "Create or overwrite a file under the workspace. The package tree is read-only.")
            .param("path", String, true, "Destination path inside the workspace.")
            .param("content", String, true, "Full file content."),
        names::INSPECT_DIR => ToolSpec::new(name, "List a directory tree with file sizes, sorted by name.")
            .param("path", String, true, "Directory to list.")
            .param("depth", Integer, false, "Levels to descend; 1 lists direct children only. Default 2."),
        names::RUN_BASH => ToolSpec::new(name, "Run a bash command. Output is truncated to head and tail; the full log is kept.")
            .param("command", String, true, "Command line passed to bash -c.")
            .param("timeout_s", Integer, false, "Timeout in seconds.")
            .param("cwd", String, false, "Working directory; defaults to the workspace root."),
        names::INSTALL_DEPS => ToolSpec::new(name, "Run the consolidated dependency installation script in the run's isolated environment prefix.")
            .param("script", String, true, "Installation script text.")
            .param("language", String, false, "shell (default), python or r."),
        names::RUN_SCRIPT => ToolSpec::new(name, "Execute a script with the interpreter implied by its extension (.py, .R, .do, .sh, .m) in batch mode.")
            .param("script_path", String, true, "Script to run.")
            .param("args", StringArray, false, "Command-line arguments.")
            .param("timeout_s", Integer, false, "Timeout in seconds.")
            .param("interpreter", String, false, "Override: python, r, stata, shell or matlab.")
            .param("cwd", String, false, "Working directory; defaults to the script's directory."),
        names::EDIT_COPY => ToolSpec::new(name, "Replace one exact, unique occurrence of text in a modified copy (<stem>_modified<ext>) beside the original. The original is never changed.")
            .param("path", String, true, "Original file.")
            .param("search", String, true, "Exact text to find; must occur exactly once.")
            .param("replace", String, true, "Replacement text."),
        names::READ_FILE_PAGINATED => ToolSpec::new(name, "Read a slice of lines from a text file.")
            .param("path", String, true, "File to read.")
            .param("offset_lines", Integer, false, "Lines to skip. Default 0.")
            .param("limit_lines", Integer, false, "Lines to return. Default 200."),
        names::EXTRACT_ELEMENTS => ToolSpec::new(name, "Render every page of a PDF to an image and export its embedded images, in document order.")
            .param("pdf_path", String, true, "PDF to extract."),
        names::VIEW_IMAGE => ToolSpec::new(name, "Attach an image to the conversation so it can be inspected.")
            .param("path", String, true, "Raster image path."),
        names::CONVERT_TO_IMAGE => ToolSpec::new(name, "Convert a PDF, CSV, TSV, XLSX or text file into images; images pass through.")
            .param("path", String, true, "Artifact to convert."),
        names::RENDER_REPORT_PDF => ToolSpec::new(name, "Render a Markdown report to PDF.")
            .param("markdown_path", String, true, "Markdown source.")
            .param("out_pdf", String, true, "Output PDF path inside the workspace."),
        _ => return None,
    };
    Some(s)
}
