use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn repro(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repro"))
        .args(args)
        .env_remove("OPENAI_API_KEY")
        .env_remove("ANTHROPIC_API_KEY")
        .output()
        .expect("spawn repro")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn synth(dir: &Path) -> PathBuf {
    let out = dir.join("synth");
    let o = repro(&["bench", "synth", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn items_file(dir: &Path, names: &[&str]) -> PathBuf {
    let path = dir.join("items.json");
    fs::write(&path, serde_json::to_string(names).unwrap()).unwrap();
    path
}

#[test]
fn mock_assess_writes_a_valid_score() {
    let tmp = tempfile::tempdir().unwrap();
    let syn = synth(tmp.path());
    let inst = syn.join("instances/clean");
    let items = items_file(tmp.path(), &["Table 4"]);
    let ws = tmp.path().join("ws");
    let o = repro(&[
        "assess",
        "--mock",
        "--paper",
        s(&inst.join("paper.pdf")),
        "--package",
        s(&inst.join("package")),
        "--items",
        s(&items),
        "--transcripts",
        s(&inst.join("transcripts")),
        "--workspace",
        s(&ws),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("score: 4"));
    let score: Value =
        serde_json::from_str(&fs::read_to_string(ws.join("reproducibility_score.json")).unwrap()).unwrap();
    assert_eq!(score["score"], 4);

    // Rerunning into the same workspace is refused.
    let again = repro(&[
        "assess",
        "--mock",
        "--paper",
        s(&inst.join("paper.pdf")),
        "--package",
        s(&inst.join("package")),
        "--items",
        s(&items),
        "--transcripts",
        s(&inst.join("transcripts")),
        "--workspace",
        s(&ws),
    ]);
    assert_eq!(again.status.code(), Some(2));
}

#[test]
fn missing_inputs_exit_with_usage_code() {
    let tmp = tempfile::tempdir().unwrap();
    let items = items_file(tmp.path(), &["Table 1"]);
    let paper = tmp.path().join("paper.pdf");
    fs::write(&paper, b"%PDF-1.4").unwrap();
    let o = repro(&[
        "assess",
        "--paper",
        s(&paper),
        "--package",
        s(&tmp.path().join("absent")),
        "--items",
        s(&items),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("package"));

    let o = repro(&[
        "bench",
        "run",
        "--manifest",
        s(&tmp.path().join("none.json")),
        "--out",
        s(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = repro(&["bench", "run", "--manifest", "m.json", "--out", "o", "--runs", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_budget_yields_emergency_score_without_a_key() {
    let tmp = tempfile::tempdir().unwrap();
    let syn = synth(tmp.path());
    let inst = syn.join("instances/clean");
    let items = items_file(tmp.path(), &["Table 4"]);
    let ws = tmp.path().join("ws");
    let o = repro(&[
        "assess",
        "--budget",
        "0",
        "--paper",
        s(&inst.join("paper.pdf")),
        "--package",
        s(&inst.join("package")),
        "--items",
        s(&items),
        "--workspace",
        s(&ws),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("assessment_incomplete: true"), "{out}");
    assert!(out.contains("cost_usd: 0"), "{out}");
    let score: Value =
        serde_json::from_str(&fs::read_to_string(ws.join("reproducibility_score.json")).unwrap()).unwrap();
    assert_eq!(score["score"], 1);
}

#[test]
fn mock_bench_run_and_rescore() {
    let tmp = tempfile::tempdir().unwrap();
    let syn = synth(tmp.path());
    let out = tmp.path().join("out");
    let o = repro(&[
        "bench",
        "run",
        "--mock",
        "--manifest",
        s(&syn.join("manifest.json")),
        "--out",
        s(&out),
        "--workers",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("accuracy         1.0000"), "{}", stdout(&o));
    let metrics: Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["aggregate"]["n"], 5);
    assert_eq!(metrics["aggregate"]["accuracy"], 1.0);

    let scored = tmp.path().join("scored");
    let o = repro(&[
        "bench",
        "score",
        "--stratify",
        "--manifest",
        s(&syn.join("manifest.json")),
        "--results",
        s(&out.join("results.jsonl")),
        "--out",
        s(&scored),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("Level-3"));
    let rescored: Value = serde_json::from_str(&fs::read_to_string(scored.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(rescored["aggregate"]["confusion"], metrics["aggregate"]["confusion"]);
}

#[test]
fn two_runs_and_patched_labels() {
    let tmp = tempfile::tempdir().unwrap();
    let syn = synth(tmp.path());
    let patch = tmp.path().join("patch.json");
    fs::write(
        &patch,
        r#"{"description":"relabel","patches":[{"op":"relabel","id":"rounding","ground_truth_score":4,"reason":"rounding only"}]}"#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    let o = repro(&[
        "bench",
        "run",
        "--mock",
        "--runs",
        "2",
        "--manifest",
        s(&syn.join("manifest.json")),
        "--patch",
        s(&patch),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<Value> = fs::read_to_string(out.join("results.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 5);
    assert!(lines.iter().all(|r| r["runs"].as_array().unwrap().len() == 2));

    let corrected: Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.corrected.json")).unwrap()).unwrap();
    let rounding = corrected["instances"]
        .as_array()
        .unwrap()
        .iter()
        .find(|i| i["id"] == "rounding")
        .unwrap();
    assert_eq!(rounding["ground_truth_score"], 4);
    // The raw manifest is left alone.
    let raw: Value = serde_json::from_str(&fs::read_to_string(syn.join("manifest.json")).unwrap()).unwrap();
    let rounding = raw["instances"]
        .as_array()
        .unwrap()
        .iter()
        .find(|i| i["id"] == "rounding")
        .unwrap();
    assert_eq!(rounding["ground_truth_score"], 3);
    // Predicted 3 against the relabeled 4.
    let metrics: Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["aggregate"]["accuracy"], 0.8);
}

#[test]
fn standalone_tools() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("run.log");
    fs::write(&log, (1..=10).map(|i| format!("line{i}\n")).collect::<String>()).unwrap();
    let o = repro(&["tools", "truncate-log", s(&log), "--head", "2", "--tail", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("line1\nline2\n"), "{text}");
    assert!(text.trim_end().ends_with("line10"), "{text}");
    assert!(!text.contains("line5"));

    let script = tmp.path().join("a.py");
    fs::write(&script, "x = 1\nx = 1\n").unwrap();
    let o = repro(&[
        "tools",
        "edit-copy",
        s(&script),
        "--search",
        "x = 1",
        "--replace",
        "y = 2",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("AmbiguousMatch"));
    assert!(!tmp.path().join("a_modified.py").exists());

    let o = repro(&[
        "tools",
        "edit-copy",
        s(&script),
        "--search",
        "x = 1\nx",
        "--replace",
        "x = 1\nz",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read_to_string(tmp.path().join("a_modified.py")).unwrap(),
        "x = 1\nz = 1\n"
    );
    assert_eq!(fs::read_to_string(&script).unwrap(), "x = 1\nx = 1\n");
}
