use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use proptest::prelude::*;
use repro_toolkit::pdf::extract::{extract_elements, ElementKind};
use repro_toolkit::pdf::writer::{markdown_to_pdf, Face, PdfBuilder, PdfPage, LETTER};
use repro_toolkit::toolbox::names;
use repro_toolkit::{Interpreter, MockRuns, RunnerMode, Sandbox, Snapshot, ToolConfig, ToolError, Toolkit};
use serde_json::json;

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    kit: Toolkit,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().canonicalize().unwrap();
    fs::create_dir_all(root.join("pkg/code")).unwrap();
    fs::create_dir_all(root.join("pkg/data")).unwrap();
    fs::create_dir_all(root.join("ws")).unwrap();
    fs::write(root.join("pkg/code/analysis.py"), "x = 1\ny = 2\nprint(x + y)\n").unwrap();
    fs::write(root.join("pkg/code/model.R"), "fit <- lm(y ~ x)\nsummary(fit)\n").unwrap();
    fs::write(root.join("pkg/data/d.csv"), "x,y\n1,2\n").unwrap();
    let sb = Sandbox::new(&root.join("pkg"), &root.join("ws"));
    let kit = Toolkit::new(sb, ToolConfig::default()).unwrap();
    Fixture { _dir: dir, root, kit }
}

fn solid(color: [u8; 3], w: u32, h: u32) -> RgbImage {
    RgbImage::from_pixel(w, h, Rgb(color))
}

#[test]
fn embedded_images_on_page_four_follow_stream_order() {
    let f = fixture();
    let first = solid([200, 10, 10], 6, 4);
    let second = solid([10, 10, 200], 3, 5);
    let mut b = PdfBuilder::new();
    for i in 1..=3 {
        let mut p = PdfPage::new(LETTER);
        p.text(72.0, 700.0, 12.0, Face::Regular, &format!("page {i}"));
        b.push(p);
    }
    let mut p4 = PdfPage::new(LETTER);
    p4.image(first.clone(), 72.0, 500.0, 200.0, 120.0);
    p4.image(second.clone(), 300.0, 100.0, 90.0, 150.0);
    b.push(p4);
    let pdf = f.root.join("ws/paper.pdf");
    b.save(&pdf).unwrap();

    let m = f.kit.extract_elements(&pdf).unwrap();
    let names: Vec<String> = m
        .elements
        .iter()
        .map(|e| e.path.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(
        names,
        vec![
            "page_001.png",
            "page_002.png",
            "page_003.png",
            "page_004.png",
            "page_004_img01.png",
            "page_004_img02.png"
        ]
    );
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(sorted, names);
    let imgs: Vec<_> = m
        .elements
        .iter()
        .filter(|e| e.kind == ElementKind::EmbeddedImage)
        .collect();
    assert_eq!(image::open(&imgs[0].path).unwrap().to_rgb8(), first);
    assert_eq!(image::open(&imgs[1].path).unwrap().to_rgb8(), second);
    assert!(imgs.iter().all(|e| e.page == 4));
}

#[test]
fn password_protected_pdf_is_reported_as_encrypted() {
    let f = fixture();
    let mut page = PdfPage::new(LETTER);
    page.text(72.0, 700.0, 12.0, Face::Regular, "secret results");
    let mut b = PdfBuilder::new();
    b.push(page);
    let mut doc = b.to_document();
    doc.trailer.set(
        "ID",
        lopdf::Object::Array(vec![
            lopdf::Object::string_literal(b"0123456789abcdef".to_vec()),
            lopdf::Object::string_literal(b"0123456789abcdef".to_vec()),
        ]),
    );
    let version = lopdf::EncryptionVersion::V2 {
        document: &doc,
        owner_password: "owner",
        user_password: "secret",
        key_length: 128,
        permissions: lopdf::Permissions::all(),
    };
    let state = lopdf::EncryptionState::try_from(version).unwrap();
    doc.encrypt(&state).unwrap();
    let path = f.root.join("ws/locked.pdf");
    doc.save(&path).unwrap();

    assert!(matches!(
        extract_elements(&path, &f.root.join("ws/el"), 50),
        Err(ToolError::EncryptedPdf)
    ));
    let out = f
        .kit
        .call(names::EXTRACT_ELEMENTS, &json!({"pdf_path": path.to_string_lossy()}));
    assert_eq!(out.error, Some("EncryptedPdf"));
}

#[test]
fn two_page_pdf_converts_to_two_images() {
    let f = fixture();
    let mut b = PdfBuilder::new();
    b.push(PdfPage::new(LETTER));
    b.push(PdfPage::new(LETTER));
    let pdf = f.root.join("pkg/data/results.pdf");
    b.save(&pdf).unwrap();
    let out = f.kit.convert_to_image(Path::new("data/results.pdf")).unwrap();
    assert_eq!(out.len(), 2);
    assert!(out[0].ends_with("artifacts/converted/results_converted_p001.png"));
    assert!(out.iter().all(|p| p.exists()));
}

#[test]
fn report_pdf_is_deterministic_and_keeps_headings() {
    let f = fixture();
    let md = "# Reproducibility Report\n\n## Overall Score\n\n3\n\n## Item-by-Item Analysis\n\n### Table 2\n\n- ok\n";
    fs::write(f.root.join("ws/report.md"), md).unwrap();
    let a = f
        .kit
        .render_report_pdf(Path::new("report.md"), Path::new("a.pdf"))
        .unwrap();
    let b = f
        .kit
        .render_report_pdf(Path::new("report.md"), Path::new("b.pdf"))
        .unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let doc = lopdf::Document::load(&a).unwrap();
    let text = doc.extract_text(&[1]).unwrap();
    for heading in [
        "Reproducibility Report",
        "Overall Score",
        "Item-by-Item Analysis",
        "Table 2",
    ] {
        assert!(text.contains(heading), "{heading} missing from {text}");
    }
    fs::write(f.root.join("ws/bad.md"), [0xff, 0xfe, 0x00]).unwrap();
    assert!(matches!(
        f.kit.render_report_pdf(Path::new("bad.md"), Path::new("c.pdf")),
        Err(ToolError::RenderFailure(_))
    ));
    assert_eq!(markdown_to_pdf("", None).page_count(), 1);
}

fn build_wheel(dir: &Path) {
    let script = format!(
        r#"
import zipfile, os
root = {dir:?}
name = "fixturepkg-0.1-py3-none-any.whl"
with zipfile.ZipFile(os.path.join(root, name), "w") as z:
    z.writestr("fixturepkg/__init__.py", "VALUE = 42\n")
    z.writestr("fixturepkg-0.1.dist-info/METADATA", "Metadata-Version: 2.1\nName: fixturepkg\nVersion: 0.1\n")
    z.writestr("fixturepkg-0.1.dist-info/WHEEL", "Wheel-Version: 1.0\nGenerator: test\nRoot-Is-Purelib: true\nTag: py3-none-any\n")
    z.writestr("fixturepkg-0.1.dist-info/RECORD", "")
"#,
        dir = dir.to_string_lossy()
    );
    let status = std::process::Command::new("python3")
        .arg("-c")
        .arg(script)
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn install_deps_installs_into_the_run_prefix() {
    let f = fixture();
    let index = f.root.join("index");
    fs::create_dir_all(&index).unwrap();
    build_wheel(&index);
    let script = format!(
        "python3 -m pip install --quiet --no-index --find-links {} fixturepkg\n",
        index.display()
    );
    let out = f.kit.install_deps(&script, Interpreter::Shell).unwrap();
    assert_eq!(
        out.record.exit_code,
        0,
        "{}",
        fs::read_to_string(&out.record.log_path).unwrap()
    );
    assert!(f.root.join("ws/env/python/fixturepkg/__init__.py").exists());

    fs::write(
        f.root.join("ws/check.py"),
        "import fixturepkg\nprint(fixturepkg.VALUE)\n",
    )
    .unwrap();
    let run = f.kit.run_script(Path::new("check.py"), &[], None, None, None).unwrap();
    assert_eq!(run.record.exit_code, 0);
    assert_eq!(run.stdout.trim(), "42");

    let typo = f
        .kit
        .install_deps(
            &format!(
                "python3 -m pip install --no-index --find-links {} fixturepkgg\n",
                index.display()
            ),
            Interpreter::Shell,
        )
        .unwrap_err();
    let ToolError::NonzeroExit { record } = typo else {
        panic!("expected NonzeroExit")
    };
    assert!(fs::read_to_string(record.log_path).unwrap().contains("fixturepkgg"));
}

#[test]
fn mock_runner_replays_stata_runs() {
    let f = fixture();
    fs::write(f.root.join("pkg/code/main.do"), "reg y x\n").unwrap();
    let mut mocks = MockRuns::default();
    mocks.insert("code/main.do", 0, "Table 1 ... 0.42\n");
    let kit = f.kit.clone().with_runner(RunnerMode::Mock(mocks));
    let out = kit.call(names::RUN_SCRIPT, &json!({"script_path": "code/main.do"}));
    assert!(out.result.ok);
    let run = out.run.unwrap();
    assert_eq!(run.interpreter, Interpreter::Stata);
    assert!(fs::read_to_string(run.log_path).unwrap().contains("0.42"));

    let out = kit.call(names::RUN_SCRIPT, &json!({"script_path": "code/model.R"}));
    assert!(!out.result.ok);
    assert_eq!(out.run.unwrap().exit_code, 127);
}

#[test]
fn missing_interpreter_is_an_environment_gap() {
    let f = fixture();
    fs::write(f.root.join("pkg/code/main.do"), "reg y x\n").unwrap();
    let out = f.kit.call(names::RUN_SCRIPT, &json!({"script_path": "code/main.do"}));
    assert_eq!(out.error, Some("InterpreterMissing"));
    assert!(out.result.render().contains("environment gap"));
    assert!(f.root.join("ws/logs/main.1.log").exists());
}

#[derive(Debug, Clone)]
enum Op {
    Write(String),
    WriteIntoPackage,
    Edit(usize),
    Bash(String),
    Script,
    Read,
    List,
}

fn op_strategy() -> impl Strategy<Value = Op> {
    prop_oneof![
        "[a-z]{1,6}".prop_map(Op::Write),
        Just(Op::WriteIntoPackage),
        (0usize..3).prop_map(Op::Edit),
        prop_oneof![
            Just("ls -la".to_string()),
            Just(
                "mkdir -p \"$REPRO_PACKAGE_ROOT/output\" && echo r > \"$REPRO_PACKAGE_ROOT/output/r.txt\"".to_string()
            ),
            Just("echo w > notes.txt".to_string()),
            Just("cat \"$REPRO_PACKAGE_ROOT/data/d.csv\"".to_string()),
        ]
        .prop_map(Op::Bash),
        Just(Op::Script),
        Just(Op::Read),
        Just(Op::List),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, .. ProptestConfig::default() })]

    #[test]
    fn tool_sequences_never_touch_originals(ops in proptest::collection::vec(op_strategy(), 1..8)) {
        let f = fixture();
        fs::write(
            f.root.join("pkg/code/figure.py"),
            "import os\nos.makedirs('../results', exist_ok=True)\nopen('../results/t.txt', 'w').write('0.42')\n",
        ).unwrap();
        let pkg = f.root.join("pkg");
        let before = Snapshot::capture(&pkg).unwrap();
        let anchors = ["x = 1", "y = 2", "print(x + y)"];
        for op in &ops {
            let out = match op {
                Op::Write(name) => f.kit.call(names::WRITE_FILE, &json!({"path": format!("{name}.txt"), "content": "c"})),
                Op::WriteIntoPackage => f.kit.call(names::WRITE_FILE, &json!({"path": pkg.join("code/analysis.py").to_string_lossy(), "content": "evil"})),
                Op::Edit(i) => f.kit.call(names::EDIT_COPY, &json!({"path": "code/analysis.py", "search": anchors[*i], "replace": "pass"})),
                Op::Bash(cmd) => f.kit.call(names::RUN_BASH, &json!({"command": cmd})),
                Op::Script => f.kit.call(names::RUN_SCRIPT, &json!({"script_path": "code/figure.py"})),
                Op::Read => f.kit.call(names::READ_FILE_PAGINATED, &json!({"path": "code/analysis.py", "limit_lines": 2})),
                Op::List => f.kit.call(names::INSPECT_DIR, &json!({"path": pkg.to_string_lossy()})),
            };
            if let Some(run) = &out.run {
                prop_assert!(run.log_path.exists());
            }
        }
        let after = Snapshot::capture(&pkg).unwrap();
        let output_dirs = f.kit.config.output_dirs.clone();
        prop_assert_eq!(before.intrusions(&after, &output_dirs), vec![]);
        prop_assert_eq!(fs::read_to_string(pkg.join("code/analysis.py")).unwrap(), "x = 1\ny = 2\nprint(x + y)\n");
    }
}
