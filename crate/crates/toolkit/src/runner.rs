//! Script runners: interpreter dispatch, log naming, and mock replay.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::ToolError;
use crate::process::{self, TIMEOUT_EXIT_CODE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpreter {
    Python,
    R,
    Stata,
    Shell,
    Matlab,
}

impl Interpreter {
    pub const ALL: [Interpreter; 5] = [
        Interpreter::Python,
        Interpreter::R,
        Interpreter::Stata,
        Interpreter::Shell,
        Interpreter::Matlab,
    ];

    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "py" => Some(Interpreter::Python),
            "r" => Some(Interpreter::R),
            "do" => Some(Interpreter::Stata),
            "sh" => Some(Interpreter::Shell),
            "m" => Some(Interpreter::Matlab),
            _ => None,
        }
    }

    pub fn for_script(path: &Path) -> Result<Self, ToolError> {
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_extension(&ext).ok_or(ToolError::UnknownInterpreter(ext))
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "python" | "python3" => Some(Interpreter::Python),
            "r" | "rscript" => Some(Interpreter::R),
            "stata" => Some(Interpreter::Stata),
            "shell" | "bash" | "sh" => Some(Interpreter::Shell),
            "matlab" => Some(Interpreter::Matlab),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Interpreter::Python => "python",
            Interpreter::R => "r",
            Interpreter::Stata => "stata",
            Interpreter::Shell => "shell",
            Interpreter::Matlab => "matlab",
        }
    }

    /// Binaries tried in order when no explicit one is configured.
    pub fn candidates(self) -> &'static [&'static str] {
        match self {
            Interpreter::Python => &["python3", "python"],
            Interpreter::R => &["Rscript"],
            Interpreter::Stata => &["stata-mp", "stata-se", "stata"],
            Interpreter::Shell => &["bash", "sh"],
            Interpreter::Matlab => &["matlab"],
        }
    }

    /// Full batch-mode command line.
    pub fn command(self, program: &str, script: &Path, args: &[String]) -> Vec<String> {
        let script = script.to_string_lossy().into_owned();
        let mut argv = vec![program.to_string()];
        match self {
            Interpreter::Python | Interpreter::Shell => argv.push(script),
            Interpreter::R => {
                argv.push("--vanilla".into());
                argv.push(script);
            }
            Interpreter::Stata => {
                argv.extend(["-b".to_string(), "do".to_string(), script]);
            }
            Interpreter::Matlab => {
                argv.push("-batch".into());
                argv.push(format!("run('{}')", script.replace('\'', "''")));
                return argv;
            }
        }
        argv.extend(args.iter().cloned());
        argv
    }
}

impl std::fmt::Display for Interpreter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub script_path: PathBuf,
    pub interpreter: Interpreter,
    pub command: Vec<String>,
    pub exit_code: i32,
    pub log_path: PathBuf,
    pub duration_secs: f64,
    pub timed_out: bool,
}

/// A finished run plus the stdout/stderr views shown to the model.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub stdout: String,
    pub stderr: String,
    pub mocked: bool,
}

/// Canned result for one script in mock mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CannedRun {
    Pair(i32, String),
    Full {
        exit_code: i32,
        #[serde(default)]
        log: String,
        #[serde(default)]
        timed_out: bool,
    },
}

impl CannedRun {
    fn parts(&self) -> (i32, &str, bool) {
        match self {
            CannedRun::Pair(code, log) => (*code, log, false),
            CannedRun::Full {
                exit_code,
                log,
                timed_out,
            } => (*exit_code, log, *timed_out),
        }
    }
}

/// Replay table for licensed interpreters in CI. Keys are script paths
/// (absolute, package-relative, or bare file names) or the literal
/// `install_deps`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MockRuns {
    pub scripts: BTreeMap<String, CannedRun>,
}

impl MockRuns {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        #[derive(Deserialize)]
        struct Nested {
            scripts: BTreeMap<String, CannedRun>,
        }
        if let Ok(nested) = serde_json::from_str::<Nested>(text) {
            return Ok(Self {
                scripts: nested.scripts,
            });
        }
        Ok(Self {
            scripts: serde_json::from_str(text)?,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ToolError> {
        let text = fs::read_to_string(path).map_err(|e| ToolError::io(path, e))?;
        Self::from_json(&text).map_err(|e| ToolError::InvalidArgument(format!("mock runs {}: {e}", path.display())))
    }

    pub fn insert(&mut self, key: &str, exit_code: i32, log: &str) {
        self.scripts
            .insert(key.to_string(), CannedRun::Pair(exit_code, log.to_string()));
    }

    pub fn lookup(&self, keys: &[String]) -> Option<&CannedRun> {
        keys.iter().find_map(|k| self.scripts.get(k))
    }
}

/// How scripts are executed.
#[derive(Debug, Clone, Default)]
pub enum RunnerMode {
    #[default]
    Real,
    Mock(MockRuns),
}

/// Everything a run needs besides the script itself.
#[derive(Debug, Clone)]
pub struct RunContext<'a> {
    pub logs_dir: &'a Path,
    pub env: &'a [(String, String)],
    pub interpreters: &'a BTreeMap<Interpreter, String>,
    pub wrapper: &'a [String],
    pub mode: &'a RunnerMode,
}

/// First unused `logs_dir/<stem>.<n>.log`, counting from 1.
pub fn next_log_path(logs_dir: &Path, stem: &str) -> PathBuf {
    let mut n = 1;
    loop {
        let candidate = logs_dir.join(format!("{stem}.{n}.log"));
        if !candidate.exists() {
            return candidate;
        }
        n += 1;
    }
}

pub fn resolve_interpreter(
    interpreter: Interpreter,
    overrides: &BTreeMap<Interpreter, String>,
) -> Result<String, ToolError> {
    if let Some(explicit) = overrides.get(&interpreter) {
        return process::which(explicit)
            .map(|p| p.to_string_lossy().into_owned())
            .ok_or_else(|| ToolError::InterpreterMissing {
                interpreter: interpreter.to_string(),
                tried: vec![explicit.clone()],
            });
    }
    interpreter
        .candidates()
        .iter()
        .find(|c| process::which(c).is_some())
        .map(|c| c.to_string())
        .ok_or_else(|| ToolError::InterpreterMissing {
            interpreter: interpreter.to_string(),
            tried: interpreter.candidates().iter().map(|s| s.to_string()).collect(),
        })
}

/// Runs one script. `mock_keys` are the lookup keys used in mock mode.
pub fn run_script(
    ctx: &RunContext<'_>,
    script: &Path,
    interpreter: Interpreter,
    args: &[String],
    cwd: &Path,
    timeout: Duration,
    mock_keys: &[String],
) -> Result<RunOutcome, ToolError> {
    let stem = script
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "script".into());
    let log_path = next_log_path(ctx.logs_dir, &stem);
    fs::create_dir_all(ctx.logs_dir).map_err(|e| ToolError::io(ctx.logs_dir, e))?;

    if let RunnerMode::Mock(mocks) = ctx.mode {
        let program = interpreter.candidates()[0];
        let command = interpreter.command(program, script, args);
        let (exit_code, log, timed_out) = match mocks.lookup(mock_keys) {
            Some(canned) => {
                let (code, log, timed_out) = canned.parts();
                (code, log.to_string(), timed_out)
            }
            None => (
                127,
                format!("mock runner: no canned run for {}\n", script.display()),
                false,
            ),
        };
        fs::write(&log_path, &log).map_err(|e| ToolError::io(&log_path, e))?;
        let record = RunRecord {
            script_path: script.to_path_buf(),
            interpreter,
            command,
            exit_code: if timed_out { TIMEOUT_EXIT_CODE } else { exit_code },
            log_path,
            duration_secs: 0.0,
            timed_out,
        };
        if timed_out {
            return Err(ToolError::Timeout {
                seconds: timeout.as_secs(),
                record: Box::new(record),
            });
        }
        return Ok(RunOutcome {
            record,
            stdout: log,
            stderr: String::new(),
            mocked: true,
        });
    }

    let program = match resolve_interpreter(interpreter, ctx.interpreters) {
        Ok(p) => p,
        Err(err) => {
            let _ = fs::write(&log_path, format!("{err}\n"));
            return Err(err);
        }
    };
    let mut argv: Vec<String> = ctx.wrapper.to_vec();
    argv.extend(interpreter.command(&program, script, args));
    let captured =
        process::run_logged(&argv, cwd, ctx.env, &log_path, timeout).map_err(|e| ToolError::io(script, e))?;
    let record = RunRecord {
        script_path: script.to_path_buf(),
        interpreter,
        command: argv,
        exit_code: captured.exit_code,
        log_path,
        duration_secs: captured.duration.as_secs_f64(),
        timed_out: captured.timed_out,
    };
    if captured.timed_out {
        return Err(ToolError::Timeout {
            seconds: timeout.as_secs(),
            record: Box::new(record),
        });
    }
    Ok(RunOutcome {
        record,
        stdout: captured.stdout,
        stderr: captured.stderr,
        mocked: false,
    })
}

/// Runs a shell command line with `bash -c`.
pub fn run_bash(ctx: &RunContext<'_>, command: &str, cwd: &Path, timeout: Duration) -> Result<RunOutcome, ToolError> {
    let log_path = next_log_path(ctx.logs_dir, "bash");
    fs::create_dir_all(ctx.logs_dir).map_err(|e| ToolError::io(ctx.logs_dir, e))?;
    let mut argv: Vec<String> = ctx.wrapper.to_vec();
    argv.extend(["bash".to_string(), "-c".to_string(), command.to_string()]);
    let captured = process::run_logged(&argv, cwd, ctx.env, &log_path, timeout).map_err(|e| ToolError::io(cwd, e))?;
    let record = RunRecord {
        script_path: PathBuf::from("<bash>"),
        interpreter: Interpreter::Shell,
        command: argv,
        exit_code: captured.exit_code,
        log_path,
        duration_secs: captured.duration.as_secs_f64(),
        timed_out: captured.timed_out,
    };
    if captured.timed_out {
        return Err(ToolError::Timeout {
            seconds: timeout.as_secs(),
            record: Box::new(record),
        });
    }
    Ok(RunOutcome {
        record,
        stdout: captured.stdout,
        stderr: captured.stderr,
        mocked: false,
    })
}
