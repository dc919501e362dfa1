//! A five-instance synthetic benchmark with stdlib-only Python packages
//! and scripted agent transcripts. Each instance exercises one failure
//! mode a real replication package tends to have.

use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use repro_core::{files, ReproductionItem, Score};
use repro_toolkit::pdf::writer::markdown_to_pdf;
use repro_toolkit::raster::{hline, vline};
use serde_json::{json, Value};

use crate::error::BenchError;
use crate::manifest::{BenchmarkInstance, Manifest, StratificationFeatures};

const P: &str = "${PACKAGE}";
const W: &str = "${WORKSPACE}";
const PAPER: &str = "${PAPER}";

macro_rules! package {
    ($($path:literal),* $(,)?) => {
        &[$(($path, include_str!(concat!("../synth/", $path)))),*]
    };
}

pub struct SynthCase {
    pub id: &'static str,
    pub item: &'static str,
    pub ground_truth: Score,
    pub features: StratificationFeatures,
    files: &'static [(&'static str, &'static str)],
    paper: &'static str,
    figure: Option<&'static [(f64, f64)]>,
}

const fn features(clear: bool, files: u32, saved: bool, direct: bool) -> StratificationFeatures {
    StratificationFeatures {
        clear_entry_and_order: clear,
        files_needing_modification: files,
        outputs_explicitly_saved: saved,
        direct_output_mapping: direct,
    }
}

const PRICE_SERIES: &[(f64, f64)] = &[
    (1920.0, 100.0),
    (1930.0, 84.0),
    (1940.0, 97.0),
    (1950.0, 121.0),
    (1960.0, 138.0),
    (1970.0, 165.0),
    (1980.0, 242.0),
    (1990.0, 311.0),
    (2000.0, 356.0),
    (2010.0, 402.0),
    (2020.0, 447.0),
];

const WAIT_SERIES: &[(f64, f64)] = &[
    (1.0, 21.0),
    (2.0, 24.0),
    (3.0, 19.0),
    (4.0, 27.0),
    (5.0, 31.0),
    (6.0, 29.0),
];

pub const CASES: [SynthCase; 5] = [
    SynthCase {
        id: "ordering",
        item: "Table 1",
        ground_truth: Score::FULLY_REPRODUCIBLE,
        features: features(false, 0, true, true),
        files: package!["ordering/README.md", "ordering/data/wave1.csv", "ordering/data/wave2.csv", "ordering/code/prepare.py", "ordering/code/analysis.py"],
        paper: "# Attendance and Test Scores\n\nStudents who attended the review sessions scored higher.\n\n## Table 1: Mean test score by attendance\n\n```\nGroup            Mean score   N\nAttended               77.3   6\nDid not attend         61.8   6\n```\n",
        figure: None,
    },
    SynthCase {
        id: "hardcoded_path",
        item: "Figure 2",
        ground_truth: Score::FULLY_REPRODUCIBLE,
        features: features(true, 1, false, true),
        files: package!["hardcoded_path/README.md", "hardcoded_path/data/series.csv", "hardcoded_path/code/plotlib.py", "hardcoded_path/code/figure2.py"],
        paper: "# A Century of Prices\n\nThe price index rose more than fourfold after a dip in the 1930s.\n\n## Figure 2: Price index, 1920 to 2020\n\n![Figure 2](figure.png)\n",
        figure: Some(PRICE_SERIES),
    },
    SynthCase {
        id: "rounding",
        item: "Table 3",
        ground_truth: Score::PRESENTATION_ISSUES,
        features: features(true, 0, true, true),
        files: package!["rounding/README.md", "rounding/data/survey.csv", "rounding/code/table3.py"],
        paper: "# Mentoring and Persistence\n\nMentored students persisted at higher rates.\n\n## Table 3: Persistence by group\n\n```\nGroup      Mean    SD     N\nTreated    0.77    0.11   5\nControl    0.58    0.07   5\n```\n",
        figure: None,
    },
    SynthCase {
        id: "clean",
        item: "Table 4",
        ground_truth: Score::FULLY_REPRODUCIBLE,
        features: features(true, 0, true, true),
        files: package!["clean/README.md", "clean/run_all.py", "clean/data/commutes.csv", "clean/code/estimate.py"],
        paper: "# Commute Length and Wages\n\nEach extra minute of commuting is associated with higher wages.\n\n## Table 4: Wage regression\n\n```\nCoefficient   Estimate\nIntercept       16.869\nMinutes          0.115\nN                    8\n```\n",
        figure: None,
    },
    SynthCase {
        id: "missing_data",
        item: "Figure 5",
        ground_truth: Score::IRREPRODUCIBLE,
        features: features(true, 0, true, true),
        files: package!["missing_data/README.md", "missing_data/data/codebook.txt", "missing_data/code/figure5.py"],
        paper: "# Hospital Wait Times\n\nMedian waits lengthened over the first half of the year.\n\n## Figure 5: Median wait in days by month\n\n![Figure 5](figure.png)\n",
        figure: Some(WAIT_SERIES),
    },
];

/// Writes every case under `dir` and returns the manifest path. Layout:
/// `manifest.json` plus `instances/<id>/{package,paper.pdf,transcripts}`.
pub fn materialize(dir: &Path) -> Result<PathBuf, BenchError> {
    let mut instances = Vec::new();
    for case in &CASES {
        let root = dir.join("instances").join(case.id);
        if root.exists() {
            fs::remove_dir_all(&root).map_err(|e| BenchError::io(&root, e))?;
        }
        for (rel, content) in case.files {
            let rel = rel.split_once('/').map_or(*rel, |(_, r)| r);
            write(&root.join("package").join(rel), content.as_bytes())?;
        }

        let assets = root.join("assets");
        if let Some(series) = case.figure {
            fs::create_dir_all(&assets).map_err(|e| BenchError::io(&assets, e))?;
            let path = assets.join("figure.png");
            line_chart(series).save(&path).map_err(|e| BenchError::io(&path, e))?;
        }
        let paper = root.join("paper.pdf");
        markdown_to_pdf(case.paper, Some(&assets))
            .save(&paper)
            .map_err(|e| BenchError::io(&paper, e))?;

        for (agent, replies) in transcripts(case) {
            let text = serde_json::to_string_pretty(&replies).expect("transcript serializes");
            write(&root.join("transcripts").join(format!("{agent}.json")), text.as_bytes())?;
        }

        let rel = |p: &str| PathBuf::from("instances").join(case.id).join(p);
        instances.push(BenchmarkInstance {
            id: case.id.to_string(),
            paper_path: rel("paper.pdf"),
            package_path: rel("package"),
            items: vec![ReproductionItem::new(case.item)],
            ground_truth_score: case.ground_truth,
            difficulty: None,
            features: Some(case.features),
            transcripts: Some(rel("transcripts")),
            mock_runs: None,
        });
    }
    let manifest = Manifest {
        name: Some("synthetic".into()),
        instances,
    };
    let path = dir.join("manifest.json");
    manifest.save(&path)?;
    Ok(path)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), BenchError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| BenchError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| BenchError::io(path, e))
}

fn line_chart(series: &[(f64, f64)]) -> RgbImage {
    let (w, h, pad) = (320i64, 200i64, 12i64);
    let mut img = RgbImage::from_pixel(w as u32, h as u32, Rgb([255, 255, 255]));
    let black = Rgb([0, 0, 0]);
    hline(&mut img, pad, w - pad, h - pad, black);
    vline(&mut img, pad, pad, h - pad, black);
    let (x0, x1) = series
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y0, y1) = series
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let to_px = |(x, y): (f64, f64)| {
        let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
        (
            pad as f64 + (x - x0) / span(x0, x1) * (w - 2 * pad - 1) as f64,
            (h - pad) as f64 - (y - y0) / span(y0, y1) * (h - 2 * pad - 1) as f64,
        )
    };
    for pair in series.windows(2) {
        let (a, b) = (to_px(pair[0]), to_px(pair[1]));
        let steps = (b.0 - a.0).abs().max((b.1 - a.1).abs()) as i64 + 1;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            let (x, y) = (
                (a.0 + (b.0 - a.0) * t).round() as i64,
                (a.1 + (b.1 - a.1) * t).round() as i64,
            );
            if (0..w).contains(&x) && (0..h).contains(&y) {
                img.put_pixel(x as u32, y as u32, black);
            }
        }
    }
    img
}

fn call(name: &str, arguments: Value) -> Value {
    json!({"tool_call": {"name": name, "arguments": arguments}})
}

fn say(text: &str) -> Value {
    json!({"content": text})
}

fn write_json(file: &str, value: Value) -> Value {
    call(
        "write_file",
        json!({"path": format!("{W}/{file}"), "content": serde_json::to_string_pretty(&value).expect("json")}),
    )
}

fn pkg(rel: &str) -> String {
    format!("{P}/{rel}")
}

fn ws(rel: &str) -> String {
    format!("{W}/{rel}")
}

fn plan(item: &str, related: &[&str], steps: &[&str]) -> Value {
    write_json(
        files::PLAN,
        json!({item: {
            "related_files": related.iter().map(|r| pkg(r)).collect::<Vec<_>>(),
            "execution_steps": steps,
        }}),
    )
}

fn execution(item: &str, reason: &str, original: &[&str], modified: &[&str], mods: &[&str], outputs: &[&str]) -> Value {
    let paths = |v: &[&str]| v.iter().map(|r| pkg(r)).collect::<Vec<_>>();
    write_json(
        files::EXECUTION_SUMMARY,
        json!({
            "code_quality_assessment": "no_errors",
            "reason": reason,
            item: {
                "original_files": paths(original),
                "modified_files": paths(modified),
                "modifications": mods,
                "output_files": paths(outputs),
            }
        }),
    )
}

fn scoring(item: &str, score: u8, original: &str, outputs: &[&str], summary: &str, consistency: &str) -> Value {
    write_json(
        files::SCORING_SUMMARY,
        json!({
            "score": score,
            item: {
                "original_item": ws(original),
                "reproduced_outputs": outputs.iter().map(|r| pkg(r)).collect::<Vec<_>>(),
                "evaluation_summary": summary,
                "consistency": consistency,
            }
        }),
    )
}

/// Scripted replies per agent, with `${PACKAGE}`, `${WORKSPACE}` and
/// `${PAPER}` placeholders.
pub fn transcripts(case: &SynthCase) -> Vec<(&'static str, Vec<Value>)> {
    let run = |rel: &str| call("run_script", json!({"script_path": pkg(rel)}));
    let read = |rel: &str| call("read_file", json!({"path": pkg(rel)}));
    let inspect = |rel: &str| call("inspect_dir", json!({"path": pkg(rel)}));
    let extract = call("extract_elements", json!({"pdf_path": PAPER}));
    let view = |path: String| call("view_image", json!({"path": path}));
    let convert = |rel: &str| call("convert_to_image", json!({"path": pkg(rel)}));
    let item = case.item;

    let (setup, exec, score) = match case.id {
        "ordering" => (
            vec![
                inspect(""),
                read("README.md"),
                read("code/analysis.py"),
                read("code/prepare.py"),
                plan(
                    item,
                    &["code/prepare.py", "code/analysis.py", "data/wave1.csv", "data/wave2.csv"],
                    &[
                        &format!("Run {P}/code/prepare.py first; it writes the appended analysis file"),
                        &format!("Run {P}/code/analysis.py, which reads that file and writes Table 1"),
                    ],
                ),
                say("analysis.py reads output/appended_final.csv, which only prepare.py creates, so prepare.py must run first."),
            ],
            vec![
                run("code/prepare.py"),
                run("code/analysis.py"),
                read("output/table1.csv"),
                execution(
                    item,
                    "Both scripts ran in the planned order without errors and Table 1 was written.",
                    &["code/prepare.py", "code/analysis.py"],
                    &[],
                    &[],
                    &["output/table1.csv"],
                ),
                say("Table 1 reproduced."),
            ],
            vec![
                extract,
                view(ws("elements/page_001.png")),
                convert("output/table1.csv"),
                scoring(
                    item,
                    4,
                    "elements/page_001.png",
                    &["output/table1.csv"],
                    "Means 77.3 and 61.8 and both group sizes of 6 match the published table exactly.",
                    "exact_match",
                ),
                say("Score 4."),
            ],
        ),
        "hardcoded_path" => (
            vec![
                inspect(""),
                read("README.md"),
                read("code/figure2.py"),
                plan(
                    item,
                    &["code/figure2.py", "code/plotlib.py", "data/series.csv"],
                    &[&format!("Run {P}/code/figure2.py")],
                ),
                say("Plan written."),
            ],
            vec![
                run("code/figure2.py"),
                call(
                    "edit_copy",
                    json!({
                        "path": pkg("code/figure2.py"),
                        "search": "DATA = \"/Users/jdoe/Dropbox/prices_project/data/series.csv\"",
                        "replace": "DATA = os.path.join(HERE, \"..\", \"data\", \"series.csv\")",
                    }),
                ),
                run("code/figure2_modified.py"),
                read("code/plotlib.py"),
                call(
                    "edit_copy",
                    json!({
                        "path": pkg("code/figure2.py"),
                        "search": "plotlib.show(fig)",
                        "replace": "os.makedirs(os.path.join(HERE, \"..\", \"output\"), exist_ok=True)\nplotlib.save(fig, os.path.join(HERE, \"..\", \"output\", \"figure2.png\"))",
                    }),
                ),
                run("code/figure2_modified.py"),
                inspect("output"),
                execution(
                    item,
                    "The computation matches the paper. The data path pointed at the authors' machine and the figure was only shown on screen; both were fixed in a modified copy.",
                    &["code/figure2.py"],
                    &["code/figure2_modified.py"],
                    &[
                        "Replaced the absolute data path with data/series.csv relative to the script",
                        "Replaced plotlib.show(fig) with plotlib.save to output/figure2.png",
                    ],
                    &["output/figure2.png"],
                ),
                say("Figure 2 saved."),
            ],
            vec![
                extract,
                view(ws("elements/page_001_img01.png")),
                view(pkg("output/figure2.png")),
                scoring(
                    item,
                    4,
                    "elements/page_001_img01.png",
                    &["output/figure2.png"],
                    "The reproduced line has the same shape, dip in the 1930s and endpoint as the published figure.",
                    "exact_match",
                ),
                say("Score 4."),
            ],
        ),
        "rounding" => (
            vec![
                read("README.md"),
                read("code/table3.py"),
                plan(item, &["code/table3.py", "data/survey.csv"], &[&format!("Run {P}/code/table3.py")]),
                say("Plan written."),
            ],
            vec![
                run("code/table3.py"),
                read("output/table3.csv"),
                execution(
                    item,
                    "The script runs cleanly and computes the statistics the paper reports.",
                    &["code/table3.py"],
                    &[],
                    &[],
                    &["output/table3.csv"],
                ),
                say("Table 3 reproduced."),
            ],
            vec![
                extract,
                view(ws("elements/page_001.png")),
                convert("output/table3.csv"),
                scoring(
                    item,
                    3,
                    "elements/page_001.png",
                    &["output/table3.csv"],
                    "Output has 0.7680/0.1071 and 0.5780/0.0676 where the paper prints 0.77/0.11 and 0.58/0.07, and group labels are lower case. Values agree after rounding; only presentation differs.",
                    "presentation_difference",
                ),
                say("Score 3."),
            ],
        ),
        "clean" => (
            vec![
                inspect(""),
                read("README.md"),
                plan(
                    item,
                    &["run_all.py", "code/estimate.py", "data/commutes.csv"],
                    &[&format!("Run {P}/run_all.py")],
                ),
                say("Plan written."),
            ],
            vec![
                run("run_all.py"),
                execution(
                    item,
                    "The master script ran without errors.",
                    &["run_all.py", "code/estimate.py"],
                    &[],
                    &[],
                    &["output/table4.csv"],
                ),
                say("Done."),
            ],
            vec![
                extract,
                view(ws("elements/page_001.png")),
                convert("output/table4.csv"),
                scoring(
                    item,
                    4,
                    "elements/page_001.png",
                    &["output/table4.csv"],
                    "Intercept 16.869, slope 0.115 and N = 8 match the table.",
                    "exact_match",
                ),
                say("Score 4."),
            ],
        ),
        "missing_data" => (
            vec![
                inspect(""),
                read("README.md"),
                plan(item, &["code/figure5.py", "data/codebook.txt"], &[&format!("Run {P}/code/figure5.py")]),
                say("Plan written. Note that the README says the input data are confidential."),
            ],
            vec![
                run("code/figure5.py"),
                inspect("data"),
                execution(
                    item,
                    "figure5.py needs data/admissions_restricted.csv, which is confidential and not in the package. The run stopped with FileNotFoundError and produced no output.",
                    &["code/figure5.py"],
                    &[],
                    &[],
                    &[],
                ),
                say("Figure 5 cannot be produced."),
            ],
            vec![
                extract,
                view(ws("elements/page_001_img01.png")),
                call("read_file", json!({"path": ws("logs/figure5.1.log")})),
                scoring(
                    item,
                    1,
                    "elements/page_001_img01.png",
                    &[],
                    "No reproduced output exists: the input data are restricted and absent, and the log ends in FileNotFoundError.",
                    "missing",
                ),
                say("Score 1."),
            ],
        ),
        other => unreachable!("unknown synthetic case {other}"),
    };
    vec![("setup", setup), ("execution", exec), ("scoring", score)]
}
