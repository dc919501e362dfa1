//! Metric reports: JSON, aligned text tables and a CSV confusion matrix.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::BenchError;
use crate::manifest::Difficulty;
use crate::metrics::{Confusion, MetricSet};

pub const METRICS_JSON: &str = "metrics.json";
pub const METRICS_TXT: &str = "metrics.txt";
pub const CONFUSION_CSV: &str = "confusion.csv";

/// Aggregated metrics, plus first-run-only metrics when each instance ran
/// more than once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub runs_per_instance: u32,
    pub aggregate: MetricSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_run: Option<MetricSet>,
}

/// Left-aligns the first column and right-aligns the rest.
pub fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn frac(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

fn s<T: ToString>(v: T) -> String {
    v.to_string()
}

pub fn summary_table(set: &MetricSet) -> String {
    aligned(&[
        vec![s("metric"), s("value")],
        vec![s("instances"), s(set.n)],
        vec![s("accuracy"), frac(Some(set.accuracy))],
        vec![s("applicability"), frac(Some(set.applicability))],
        vec![s("executability"), frac(set.executability)],
        vec![s("mean cost (USD)"), s(set.mean_cost_usd)],
    ])
}

pub fn confusion_table(c: &Confusion) -> String {
    let mut rows = vec![["gt\\pred", "1", "2", "3", "4", "invalid", "total"].map(s).to_vec()];
    for (i, row) in c.counts.iter().enumerate() {
        let mut cells = vec![s(i + 1)];
        cells.extend(row.iter().map(s));
        cells.push(s(c.invalid[i]));
        cells.push(s(row.iter().sum::<u32>() + c.invalid[i]));
        rows.push(cells);
    }
    aligned(&rows)
}

pub fn level_table(set: &MetricSet) -> String {
    let mut rows = vec![["level", "n", "accuracy", "executability"].map(s).to_vec()];
    for (level, m) in &set.per_level {
        rows.push(vec![s(level), s(m.n), frac(Some(m.accuracy)), frac(m.executability)]);
    }
    aligned(&rows)
}

/// Ground-truth score counts per level with a total row and column.
pub fn level_score_table(set: &MetricSet) -> String {
    let mut rows = vec![["level", "score 1", "score 2", "score 3", "score 4", "total"]
        .map(s)
        .to_vec()];
    let mut totals = [0u32; 4];
    for level in Difficulty::ALL {
        let Some(m) = set.per_level.get(&level) else { continue };
        let mut cells = vec![s(level)];
        cells.extend(m.score_totals.iter().map(s));
        cells.push(s(m.score_totals.iter().sum::<u32>()));
        for (t, v) in totals.iter_mut().zip(m.score_totals) {
            *t += v;
        }
        rows.push(cells);
    }
    let mut cells = vec![s("Total")];
    cells.extend(totals.iter().map(s));
    cells.push(s(totals.iter().sum::<u32>()));
    rows.push(cells);
    aligned(&rows)
}

pub fn render_text(report: &MetricsReport, stratified: bool) -> String {
    let mut out = String::new();
    let section = |out: &mut String, title: &str, set: &MetricSet| {
        out.push_str(&format!("== {title} ==\n"));
        out.push_str(&summary_table(set));
        out.push_str("\nconfusion (rows: ground truth, columns: predicted)\n");
        out.push_str(&confusion_table(&set.confusion));
        if stratified {
            out.push_str("\nper level\n");
            out.push_str(&level_table(set));
            out.push_str("\nground-truth scores per level\n");
            out.push_str(&level_score_table(set));
            if set.unlabeled > 0 {
                out.push_str(&format!("({} instances without a difficulty label)\n", set.unlabeled));
            }
        }
    };
    let title = if report.runs_per_instance > 1 {
        format!("best of {} runs", report.runs_per_instance)
    } else {
        "single run".to_string()
    };
    section(&mut out, &title, &report.aggregate);
    if let Some(first) = &report.first_run {
        out.push('\n');
        section(&mut out, "first run only", first);
    }
    out
}

pub fn confusion_csv(c: &Confusion) -> String {
    let mut out = String::from("ground_truth,pred_1,pred_2,pred_3,pred_4,invalid\n");
    for (i, row) in c.counts.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(u32::to_string).collect();
        out.push_str(&format!("{},{},{}\n", i + 1, cells.join(","), c.invalid[i]));
    }
    out
}

/// Writes metrics.json, metrics.txt and confusion.csv into `dir`.
pub fn write_reports(dir: &Path, report: &MetricsReport, stratified: bool) -> Result<Vec<PathBuf>, BenchError> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let files = [
        (
            METRICS_JSON,
            serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        ),
        (METRICS_TXT, render_text(report, stratified)),
        (CONFUSION_CSV, confusion_csv(&report.aggregate.confusion)),
    ];
    let mut written = Vec::new();
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| BenchError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
