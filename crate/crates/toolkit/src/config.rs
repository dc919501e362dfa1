use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::runner::Interpreter;

/// Shell patterns refused by `run_bash` unless the config replaces them.
pub const DEFAULT_DENYLIST: &[&str] = &[
    r"\brm\s+(-[a-zA-Z]*\s+)*(/|~|\$HOME)(\*|\s|$)",
    r"\bmkfs(\.\w+)?\b",
    r"\bdd\b[^|;&]*\bof=/dev/",
    r":\(\)\s*\{\s*:\s*\|\s*:\s*&\s*\}\s*;\s*:",
    r"\b(shutdown|reboot|halt|poweroff)\b",
    r"\bchmod\s+(-[a-zA-Z]+\s+)*[0-7]{3,4}\s+/(\s|$)",
    r">\s*/dev/sd[a-z]",
    r"\bgit\s+push\b",
];

/// Package-relative directories where scripts may legitimately write.
pub const DEFAULT_OUTPUT_DIRS: &[&str] = &["output", "outputs", "results", "figures", "tables"];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ToolConfig {
    /// Upper bound on characters returned to the model by any one call.
    pub result_cap_chars: usize,
    pub dir_entry_cap: usize,
    pub log_head_lines: usize,
    pub log_tail_lines: usize,
    pub default_page_lines: usize,
    #[serde(with = "secs")]
    pub script_timeout: Duration,
    #[serde(with = "secs")]
    pub bash_timeout: Duration,
    #[serde(with = "secs")]
    pub install_timeout: Duration,
    pub render_dpi: u32,
    pub image_max_dim: u32,
    pub denylist: Vec<String>,
    pub output_dirs: Vec<PathBuf>,
    /// Explicit interpreter binaries, keyed by interpreter.
    pub interpreters: BTreeMap<Interpreter, String>,
    /// Command prefix for container isolation, e.g. `["docker", "exec", "box"]`.
    pub command_wrapper: Vec<String>,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            result_cap_chars: 16_000,
            dir_entry_cap: 500,
            log_head_lines: 50,
            log_tail_lines: 50,
            default_page_lines: 200,
            script_timeout: Duration::from_secs(300),
            bash_timeout: Duration::from_secs(120),
            install_timeout: Duration::from_secs(900),
            render_dpi: 100,
            image_max_dim: 1568,
            denylist: DEFAULT_DENYLIST.iter().map(|s| s.to_string()).collect(),
            output_dirs: DEFAULT_OUTPUT_DIRS.iter().map(PathBuf::from).collect(),
            interpreters: BTreeMap::new(),
            command_wrapper: Vec::new(),
        }
    }
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_secs())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs(u64::deserialize(d)?))
    }
}
