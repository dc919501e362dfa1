#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use repro_core::llm::{ChatMessage, ScriptedBackend, ToolCall};
use repro_core::{AssessmentInput, ReproductionItem};
use repro_toolkit::pdf::writer::markdown_to_pdf;
use rust_decimal::Decimal;
use serde_json::Value;

pub struct Fixture {
    pub _dir: tempfile::TempDir,
    pub root: PathBuf,
    pub input: AssessmentInput,
}

impl Fixture {
    pub fn pkg(&self) -> PathBuf {
        self.input.package_root.clone()
    }

    pub fn ws(&self) -> PathBuf {
        self.input.workspace_root.clone()
    }

    pub fn vars(&self) -> Vars {
        Vars {
            pkg: self.pkg().display().to_string(),
            ws: self.ws().display().to_string(),
            paper: self.input.paper_path.display().to_string(),
        }
    }
}

pub struct Vars {
    pub pkg: String,
    pub ws: String,
    pub paper: String,
}

pub const FIGURE_SCRIPT: &str = r#"import os
here = os.path.dirname(os.path.abspath(__file__))
out = os.path.join(here, "..", "output")
os.makedirs(out, exist_ok=True)
with open(os.path.join(out, "fig1.csv"), "w") as f:
    f.write("x,y\n1,2\n2,4\n")
print("EXEC-ONLY-MARKER 7f3a")
"#;

/// Package with one stdlib-only script producing `output/fig1.csv`, a
/// one-page paper and an unused workspace path.
pub fn fixture(items: &[&str]) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().canonicalize().unwrap();
    let pkg = root.join("pkg");
    fs::create_dir_all(pkg.join("code")).unwrap();
    fs::write(pkg.join("README.md"), "Run code/make_fig.py to build Figure 1.\n").unwrap();
    fs::write(pkg.join("code/make_fig.py"), FIGURE_SCRIPT).unwrap();
    let paper = root.join("paper.pdf");
    markdown_to_pdf("# A Study\n\n## Figure 1\n\n- y doubles x\n", None)
        .save(&paper)
        .unwrap();
    Fixture {
        input: AssessmentInput {
            paper_path: paper,
            package_root: pkg,
            items: items.iter().map(|n| ReproductionItem::new(*n)).collect(),
            budget_usd: Decimal::new(4, 0),
            workspace_root: root.join("ws"),
        },
        root,
        _dir: dir,
    }
}

static CALLS: AtomicUsize = AtomicUsize::new(0);

pub fn call(name: &str, arguments: Value) -> ChatMessage {
    ChatMessage::assistant_tool_call(ToolCall {
        id: format!("call_{}", CALLS.fetch_add(1, Ordering::Relaxed)),
        name: name.into(),
        arguments,
    })
}

pub fn text(content: &str) -> ChatMessage {
    ChatMessage::assistant(content)
}

pub fn scripted(replies: Vec<ChatMessage>) -> Arc<ScriptedBackend> {
    Arc::new(ScriptedBackend::new(replies))
}

pub fn write(path: &Path, value: &Value) -> ChatMessage {
    call(
        "write_file",
        serde_json::json!({"path": path.display().to_string(), "content": serde_json::to_string_pretty(value).unwrap()}),
    )
}

pub fn transcript(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

pub fn assistant_turns(lines: &[Value]) -> usize {
    lines.iter().filter(|l| l["role"] == "assistant").count()
}
