//! Subprocess execution with a hard timeout and a persisted combined log.

use std::fs::File;
use std::io::{self, Read, Write};
use std::os::unix::process::CommandExt;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

/// Exit code reported for a process killed on timeout.
pub const TIMEOUT_EXIT_CODE: i32 = 124;

#[derive(Debug, Clone)]
pub struct Captured {
    pub exit_code: i32,
    pub timed_out: bool,
    pub duration: Duration,
    pub stdout: String,
    pub stderr: String,
}

/// Runs `argv` in its own process group, teeing stdout and stderr into
/// `log_path`. On timeout the whole group is killed and the partial log
/// is kept.
pub fn run_logged(
    argv: &[String],
    cwd: &Path,
    env: &[(String, String)],
    log_path: &Path,
    timeout: Duration,
) -> io::Result<Captured> {
    let (program, args) = argv
        .split_first()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "empty command"))?;
    if let Some(parent) = log_path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let log = Arc::new(Mutex::new(File::create(log_path)?));
    let started = Instant::now();

    let mut cmd = Command::new(program);
    cmd.args(args)
        .current_dir(cwd)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let mut child = match cmd.spawn() {
        Ok(child) => child,
        Err(err) => {
            let _ = writeln!(log.lock().unwrap(), "failed to start {program}: {err}");
            return Err(err);
        }
    };

    let (done_tx, done_rx) = mpsc::channel();
    let out_buf = Arc::new(Mutex::new(Vec::new()));
    let err_buf = Arc::new(Mutex::new(Vec::new()));
    if let Some(stdout) = child.stdout.take() {
        pump(stdout, Arc::clone(&out_buf), Arc::clone(&log), done_tx.clone());
    }
    if let Some(stderr) = child.stderr.take() {
        pump(stderr, Arc::clone(&err_buf), Arc::clone(&log), done_tx.clone());
    }
    drop(done_tx);

    let pgid = child.id() as i32;
    let mut timed_out = false;
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if started.elapsed() >= timeout {
            timed_out = true;
            // SAFETY: kill(2) on a process group we created; no memory is shared.
            unsafe {
                libc::kill(-pgid, libc::SIGKILL);
            }
            break child.wait()?;
        }
        thread::sleep(Duration::from_millis(20));
    };
    if !timed_out {
        // Reap stragglers that kept the pipes open.
        // SAFETY: as above.
        unsafe {
            libc::kill(-pgid, libc::SIGKILL);
        }
    }
    // Readers finish once every writer end is closed. A detached grandchild
    // holding a pipe would block forever, so cap the wait.
    let grace = Instant::now() + Duration::from_secs(2);
    for _ in 0..2 {
        let left = grace.saturating_duration_since(Instant::now());
        if done_rx.recv_timeout(left).is_err() {
            break;
        }
    }
    let duration = started.elapsed();

    let exit_code = if timed_out {
        let _ = writeln!(
            log.lock().unwrap(),
            "\n[killed after {} s timeout]",
            timeout.as_secs_f64()
        );
        TIMEOUT_EXIT_CODE
    } else {
        exit_code_of(status)
    };
    let _ = log.lock().unwrap().flush();

    let take = |buf: &Arc<Mutex<Vec<u8>>>| String::from_utf8_lossy(&buf.lock().unwrap()).into_owned();
    Ok(Captured {
        exit_code,
        timed_out,
        duration,
        stdout: take(&out_buf),
        stderr: take(&err_buf),
    })
}

fn exit_code_of(status: std::process::ExitStatus) -> i32 {
    use std::os::unix::process::ExitStatusExt;
    status.code().or_else(|| status.signal().map(|s| 128 + s)).unwrap_or(-1)
}

fn pump<R: Read + Send + 'static>(
    mut source: R,
    buf: Arc<Mutex<Vec<u8>>>,
    log: Arc<Mutex<File>>,
    done: mpsc::Sender<()>,
) {
    thread::spawn(move || {
        let mut chunk = [0u8; 8192];
        loop {
            match source.read(&mut chunk) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    buf.lock().unwrap().extend_from_slice(&chunk[..n]);
                    let _ = log.lock().unwrap().write_all(&chunk[..n]);
                }
            }
        }
        let _ = done.send(());
    });
}

/// Finds `name` on PATH, or checks it directly when it contains a slash.
pub fn which(name: &str) -> Option<std::path::PathBuf> {
    use std::os::unix::fs::PermissionsExt;
    let executable = |p: &Path| {
        p.metadata()
            .map(|m| m.is_file() && m.permissions().mode() & 0o111 != 0)
            .unwrap_or(false)
    };
    if name.contains('/') {
        let p = Path::new(name);
        return executable(p).then(|| p.to_path_buf());
    }
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .map(|dir| dir.join(name))
        .find(|p| executable(p))
}
