//! The final reproducibility report and its fixed markdown template.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::deliverables::{DeliverableFile, ExecutionSummary, ReproductionPlan, ScoringSummary};
use crate::rubric;
use crate::score::Score;

/// Section headings, in the only order they may appear.
pub const SECTIONS: [&str; 4] = [
    "Overall Score",
    "Scoring Criteria",
    "Overall Explanation",
    "Item-by-Item Analysis",
];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportItem {
    pub name: String,
    #[serde(default)]
    pub reproduction_steps: Vec<String>,
    #[serde(default)]
    pub modifications: Vec<String>,
    #[serde(default)]
    pub outputs: Vec<String>,
    #[serde(default)]
    pub comparison_result: String,
    #[serde(default)]
    pub assessment: String,
}

/// Machine-readable counterpart of `report.md`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub overall_score: Score,
    #[serde(default)]
    pub criteria_text: String,
    pub overall_explanation: String,
    pub items: Vec<ReportItem>,
    #[serde(default)]
    pub assessment_incomplete: bool,
    #[serde(default)]
    pub generated_at: String,
}

impl DeliverableFile for Report {}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

impl Report {
    /// Builds a report directly from the summaries. Item order follows
    /// `item_order`.
    pub fn from_summaries<'a>(
        item_order: impl IntoIterator<Item = &'a str>,
        plan: Option<&ReproductionPlan>,
        execution: &ExecutionSummary,
        scoring: &ScoringSummary,
        generated_at: &str,
    ) -> Self {
        let items: Vec<ReportItem> = item_order
            .into_iter()
            .map(|name| {
                let exec = execution.items.get(name).cloned().unwrap_or_default();
                let score = scoring.items.get(name).cloned().unwrap_or_default();
                let mut steps = plan
                    .and_then(|p| p.items.get(name))
                    .map(|entry| entry.execution_steps.clone())
                    .unwrap_or_default();
                if steps.is_empty() {
                    steps = exec
                        .modified_files
                        .iter()
                        .chain(exec.original_files.iter())
                        .map(|p| format!("Ran `{}`", file_name(p)))
                        .collect();
                }
                let outputs: Vec<String> = exec.output_files.iter().map(|p| file_name(p)).collect();
                let assessment = if outputs.is_empty() {
                    format!(
                        "Reproduction failed: no output files were produced for this item. Evidence: {}",
                        score.evaluation_summary
                    )
                } else {
                    score.evaluation_summary.clone()
                };
                ReportItem {
                    name: name.to_string(),
                    reproduction_steps: steps,
                    modifications: exec.modifications.clone(),
                    outputs,
                    comparison_result: score.evaluation_summary.clone(),
                    assessment,
                }
            })
            .collect();
        let names: Vec<&str> = items.iter().map(|i| i.name.as_str()).collect();
        let overall_explanation = format!(
            "The score of {} was assigned after assessing {}. Code quality was assessed as {}: {}",
            scoring.score,
            names.join(", "),
            execution.code_quality_assessment,
            execution.reason
        );
        Self {
            overall_score: scoring.score,
            criteria_text: rubric::rubric_text(),
            overall_explanation,
            items,
            assessment_incomplete: scoring.assessment_incomplete,
            generated_at: generated_at.to_string(),
        }
    }

    /// Renders the fixed four-section markdown document.
    pub fn to_markdown(&self) -> String {
        let mut md = String::from("# Reproducibility Report\n\n");
        md.push_str(&format!("## {}\n", SECTIONS[0]));
        md.push_str(&format!(
            "The final reproducibility score is **{}**. {}\n",
            self.overall_score,
            rubric::meaning(self.overall_score)
        ));
        if self.assessment_incomplete {
            md.push_str("This score was emitted without a completed assessment.\n");
        }
        md.push_str(&format!("\n## {}\n", SECTIONS[1]));
        let criteria = if self.criteria_text.is_empty() {
            rubric::rubric_text()
        } else {
            self.criteria_text.clone()
        };
        md.push_str(&criteria);
        if !criteria.ends_with('\n') {
            md.push('\n');
        }
        md.push_str(&format!(
            "\n## {}\n{}\n",
            SECTIONS[2],
            self.overall_explanation.trim_end()
        ));
        md.push_str(&format!("\n## {}\n", SECTIONS[3]));
        for item in &self.items {
            md.push_str(&format!("\n### {}\n", item.name));
            bullet_list(
                &mut md,
                "How it was reproduced",
                &item.reproduction_steps,
                "No steps were executed.",
            );
            bullet_list(&mut md, "Modifications made", &item.modifications, "None.");
            let outputs: Vec<String> = item.outputs.iter().map(|o| format!("`{o}`")).collect();
            bullet_list(&mut md, "Output generated", &outputs, "No output files were produced.");
            bullet_list(
                &mut md,
                "Comparison result",
                std::slice::from_ref(&item.comparison_result),
                "",
            );
            bullet_list(
                &mut md,
                "Reproducibility assessment",
                std::slice::from_ref(&item.assessment),
                "",
            );
        }
        md
    }
}

fn bullet_list(md: &mut String, title: &str, entries: &[String], empty: &str) {
    md.push_str(&format!("- **{title}**:\n"));
    let entries: Vec<&String> = entries.iter().filter(|e| !e.trim().is_empty()).collect();
    if entries.is_empty() {
        if !empty.is_empty() {
            md.push_str(&format!("  - {empty}\n"));
        }
        return;
    }
    for entry in entries {
        md.push_str(&format!("  - {}\n", entry.trim()));
    }
}
