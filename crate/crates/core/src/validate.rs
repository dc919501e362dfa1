//! Schema checks run on every deliverable before it is handed downstream.
//! Violations are data: the validators never fail and never mutate.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::deliverables::{DeliverableFile, ExecutionSummary, ReproductionPlan, ScoringSummary};
use crate::input::AssessmentInput;
use crate::paths;
use crate::report::Report;

/// Extensions the script runners know how to execute.
pub const SCRIPT_EXTENSIONS: &[&str] = &["py", "r", "do", "sh", "m"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Malformed,
    ItemNotPlanned,
    ItemMissing,
    UnknownItem,
    EmptySteps,
    StepScript,
    DanglingPath,
    PathEscapesWorkspace,
    OverwritesOriginal,
    MissingOutput,
    ScoreMismatch,
}

impl ViolationKind {
    fn label(self) -> &'static str {
        match self {
            ViolationKind::Malformed => "malformed deliverable",
            ViolationKind::ItemNotPlanned => "item not planned",
            ViolationKind::ItemMissing => "item missing",
            ViolationKind::UnknownItem => "unknown item",
            ViolationKind::EmptySteps => "empty execution steps",
            ViolationKind::StepScript => "step must name exactly one script",
            ViolationKind::DanglingPath => "dangling path",
            ViolationKind::PathEscapesWorkspace => "path escapes workspace",
            ViolationKind::OverwritesOriginal => "modified file overwrites original",
            ViolationKind::MissingOutput => "output file missing",
            ViolationKind::ScoreMismatch => "score mismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub item: Option<String>,
    pub detail: String,
}

impl Violation {
    pub fn new(kind: ViolationKind, item: Option<&str>, detail: impl Into<String>) -> Self {
        Self {
            kind,
            item: item.map(str::to_string),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.item {
            Some(item) => write!(f, "{} [{}]: {}", self.kind.label(), item, self.detail),
            None => write!(f, "{}: {}", self.kind.label(), self.detail),
        }
    }
}

/// Script paths named in one execution step.
pub fn scripts_in_step(step: &str) -> Vec<String> {
    let mut found: Vec<String> = Vec::new();
    for token in step.split_whitespace() {
        let strip = |t: &'_ str| -> String {
            t.trim_matches(|c: char| matches!(c, '`' | '"' | '\'' | '(' | ')' | ',' | ';' | ':'))
                .to_string()
        };
        let mut candidate = strip(token);
        // a sentence-final period after the extension
        if !has_script_extension(&candidate) {
            candidate = strip(candidate.trim_end_matches('.'));
        }
        let candidate = candidate.as_str();
        if has_script_extension(candidate) && !found.iter().any(|f| f == candidate) {
            found.push(candidate.to_string());
        }
    }
    found
}

pub fn has_script_extension(token: &str) -> bool {
    let path = Path::new(token);
    let Some(stem) = path.file_stem() else { return false };
    if stem.is_empty() || stem.to_string_lossy().starts_with('.') {
        return false;
    }
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| SCRIPT_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

struct Roots<'a> {
    input: &'a AssessmentInput,
}

impl Roots<'_> {
    fn resolve(&self, path: &Path) -> PathBuf {
        paths::resolve(&self.input.package_root, path)
    }

    fn contained(&self, resolved: &Path) -> bool {
        paths::is_within(resolved, &[&self.input.package_root, &self.input.workspace_root])
    }

    fn check_path(&self, path: &Path, item: Option<&str>, must_exist: ViolationKind, out: &mut Vec<Violation>) {
        let resolved = self.resolve(path);
        if !self.contained(&resolved) {
            out.push(Violation::new(
                ViolationKind::PathEscapesWorkspace,
                item,
                path.display().to_string(),
            ));
        } else if !resolved.exists() {
            out.push(Violation::new(must_exist, item, path.display().to_string()));
        }
    }
}

fn check_coverage<'a>(
    input: &AssessmentInput,
    keys: impl Iterator<Item = &'a String>,
    missing: ViolationKind,
    out: &mut Vec<Violation>,
) {
    let keys: BTreeSet<&str> = keys.map(String::as_str).collect();
    for name in input.item_names() {
        if !keys.contains(name) {
            out.push(Violation::new(missing, Some(name), "no entry for this item"));
        }
    }
    for key in keys {
        if !input.has_item(key) {
            out.push(Violation::new(
                ViolationKind::UnknownItem,
                Some(key),
                "not an input item",
            ));
        }
    }
}

pub fn validate_plan(plan: &ReproductionPlan, input: &AssessmentInput) -> Vec<Violation> {
    let roots = Roots { input };
    let mut out = Vec::new();
    check_coverage(input, plan.items.keys(), ViolationKind::ItemNotPlanned, &mut out);
    for (name, entry) in &plan.items {
        let item = Some(name.as_str());
        if entry.execution_steps.is_empty() && entry.unplannable.is_none() {
            out.push(Violation::new(
                ViolationKind::EmptySteps,
                item,
                "no steps and not flagged unplannable",
            ));
        }
        for step in &entry.execution_steps {
            let scripts = scripts_in_step(step);
            if scripts.len() != 1 {
                out.push(Violation::new(
                    ViolationKind::StepScript,
                    item,
                    format!("{step:?} names {} scripts", scripts.len()),
                ));
                continue;
            }
            roots.check_path(Path::new(&scripts[0]), item, ViolationKind::DanglingPath, &mut out);
        }
        for file in &entry.related_files {
            roots.check_path(file, item, ViolationKind::DanglingPath, &mut out);
        }
    }
    if let Some(script) = &plan.setup_script {
        roots.check_path(script, None, ViolationKind::DanglingPath, &mut out);
    }
    out
}

pub fn validate_execution_summary(summary: &ExecutionSummary, input: &AssessmentInput) -> Vec<Violation> {
    let roots = Roots { input };
    let mut out = Vec::new();
    check_coverage(input, summary.items.keys(), ViolationKind::ItemMissing, &mut out);
    for (name, entry) in &summary.items {
        let item = Some(name.as_str());
        let originals: BTreeSet<PathBuf> = entry.original_files.iter().map(|p| roots.resolve(p)).collect();
        for modified in &entry.modified_files {
            if originals.contains(&roots.resolve(modified)) {
                out.push(Violation::new(
                    ViolationKind::OverwritesOriginal,
                    item,
                    modified.display().to_string(),
                ));
            }
        }
        for output in &entry.output_files {
            roots.check_path(output, item, ViolationKind::MissingOutput, &mut out);
        }
        for file in entry.original_files.iter().chain(&entry.modified_files) {
            let resolved = roots.resolve(file);
            if !roots.contained(&resolved) {
                out.push(Violation::new(
                    ViolationKind::PathEscapesWorkspace,
                    item,
                    file.display().to_string(),
                ));
            }
        }
    }
    out
}

pub fn validate_scoring_summary(summary: &ScoringSummary, input: &AssessmentInput) -> Vec<Violation> {
    let roots = Roots { input };
    let mut out = Vec::new();
    check_coverage(input, summary.items.keys(), ViolationKind::ItemMissing, &mut out);
    for (name, entry) in &summary.items {
        let item = Some(name.as_str());
        for output in &entry.reproduced_outputs {
            roots.check_path(output, item, ViolationKind::MissingOutput, &mut out);
        }
        if let Some(original) = &entry.original_item {
            roots.check_path(original, item, ViolationKind::DanglingPath, &mut out);
        }
    }
    out
}

pub fn validate_report(report: &Report, input: &AssessmentInput, scoring: Option<&ScoringSummary>) -> Vec<Violation> {
    let mut out = Vec::new();
    let names: Vec<String> = report.items.iter().map(|i| i.name.clone()).collect();
    let unique: BTreeSet<&String> = names.iter().collect();
    if unique.len() != names.len() {
        out.push(Violation::new(
            ViolationKind::Malformed,
            None,
            "duplicate item sections",
        ));
    }
    check_coverage(input, names.iter(), ViolationKind::ItemMissing, &mut out);
    if let Some(scoring) = scoring {
        if scoring.score != report.overall_score {
            out.push(Violation::new(
                ViolationKind::ScoreMismatch,
                None,
                format!(
                    "report says {} but the scoring summary says {}",
                    report.overall_score, scoring.score
                ),
            ));
        }
    }
    out
}

/// Parses a deliverable file, turning read or parse failures into a
/// `Malformed` violation.
pub fn load<T: DeliverableFile>(path: &Path) -> Result<T, Vec<Violation>> {
    T::read_from(path).map_err(|e| vec![Violation::new(ViolationKind::Malformed, None, e.to_string())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deliverables::{CodeQuality, ItemExecution, ItemScoring, PlanEntry};
    use crate::input::ReproductionItem;
    use crate::score::Score;
    use rust_decimal::Decimal;
    use std::collections::BTreeMap;

    struct Fixture {
        _dir: tempfile::TempDir,
        input: AssessmentInput,
    }

    fn fixture(items: &[&str]) -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().canonicalize().unwrap();
        let package = root.join("package");
        std::fs::create_dir_all(package.join("scripts")).unwrap();
        for i in 0..6 {
            std::fs::write(package.join(format!("scripts/step{i}.R")), "x <- 1\n").unwrap();
        }
        std::fs::write(package.join("data.csv"), "a,b\n").unwrap();
        std::fs::write(root.join("paper.pdf"), "%PDF").unwrap();
        let workspace = root.join("ws");
        std::fs::create_dir_all(&workspace).unwrap();
        Fixture {
            input: AssessmentInput {
                paper_path: root.join("paper.pdf"),
                package_root: package,
                items: items.iter().map(|n| ReproductionItem::new(*n)).collect(),
                budget_usd: Decimal::new(4, 0),
                workspace_root: workspace,
            },
            _dir: dir,
        }
    }

    fn six_step_plan(fx: &Fixture) -> ReproductionPlan {
        let pkg = &fx.input.package_root;
        let steps = (0..6)
            .map(|i| format!("Run the script {}", pkg.join(format!("scripts/step{i}.R")).display()))
            .collect();
        ReproductionPlan {
            setup_script: None,
            items: BTreeMap::from([(
                "Figure 3".to_string(),
                PlanEntry {
                    related_files: vec![pkg.join("scripts/step0.R"), pkg.join("data.csv")],
                    execution_steps: steps,
                    unplannable: None,
                },
            )]),
        }
    }

    #[test]
    fn six_step_plan_is_valid() {
        let fx = fixture(&["Figure 3"]);
        assert_eq!(validate_plan(&six_step_plan(&fx), &fx.input), vec![]);
    }

    #[test]
    fn missing_item_key() {
        let fx = fixture(&["Figure 3", "Table 2"]);
        let violations = validate_plan(&six_step_plan(&fx), &fx.input);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].kind, ViolationKind::ItemNotPlanned);
        assert!(violations[0].to_string().starts_with("item not planned"));
    }

    #[test]
    fn path_outside_roots() {
        let fx = fixture(&["Figure 3"]);
        let mut plan = six_step_plan(&fx);
        plan.items
            .get_mut("Figure 3")
            .unwrap()
            .related_files
            .push("/etc/passwd".into());
        let violations = validate_plan(&plan, &fx.input);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].to_string().starts_with("path escapes workspace"));
    }

    #[test]
    fn step_rules() {
        let fx = fixture(&["Figure 3"]);
        let mut plan = six_step_plan(&fx);
        let entry = plan.items.get_mut("Figure 3").unwrap();
        entry.execution_steps.push("Run a.R then b.R".into());
        entry.execution_steps.push("Open the README".into());
        entry.execution_steps.push("Run scripts/missing.py.".into());
        let kinds: Vec<ViolationKind> = validate_plan(&plan, &fx.input).into_iter().map(|v| v.kind).collect();
        assert_eq!(
            kinds,
            vec![
                ViolationKind::StepScript,
                ViolationKind::StepScript,
                ViolationKind::DanglingPath
            ]
        );
        plan.items.get_mut("Figure 3").unwrap().execution_steps.clear();
        assert_eq!(validate_plan(&plan, &fx.input)[0].kind, ViolationKind::EmptySteps);
        plan.items.get_mut("Figure 3").unwrap().unplannable = Some("no script".into());
        assert_eq!(validate_plan(&plan, &fx.input), vec![]);
    }

    #[test]
    fn step_script_tokens() {
        assert_eq!(
            scripts_in_step("Run the script /p/Figure03.R to generate Figure 3"),
            vec!["/p/Figure03.R"]
        );
        assert_eq!(scripts_in_step("Run `main.do`."), vec!["main.do"]);
        assert_eq!(scripts_in_step("python3 code/a.py --fast"), vec!["code/a.py"]);
        assert!(scripts_in_step("Open results.csv").is_empty());
    }

    #[test]
    fn execution_summary_rules() {
        let fx = fixture(&["Figure 3"]);
        let pkg = &fx.input.package_root;
        let out = fx.input.workspace_root.join("fig.png");
        std::fs::write(&out, b"png").unwrap();
        let mut summary = ExecutionSummary {
            code_quality_assessment: CodeQuality::NoErrors,
            reason: String::new(),
            items: BTreeMap::from([(
                "Figure 3".to_string(),
                ItemExecution {
                    original_files: vec![pkg.join("scripts/step0.R")],
                    modified_files: vec![pkg.join("scripts/step0_modified.R")],
                    modifications: vec![],
                    output_files: vec![out.clone()],
                },
            )]),
        };
        assert_eq!(validate_execution_summary(&summary, &fx.input), vec![]);
        let entry = summary.items.get_mut("Figure 3").unwrap();
        entry.modified_files.push(pkg.join("scripts/./step0.R"));
        entry.output_files.push(fx.input.workspace_root.join("nope.png"));
        let kinds: Vec<ViolationKind> = validate_execution_summary(&summary, &fx.input)
            .into_iter()
            .map(|v| v.kind)
            .collect();
        assert_eq!(
            kinds,
            vec![ViolationKind::OverwritesOriginal, ViolationKind::MissingOutput]
        );
    }

    #[test]
    fn scoring_and_report_coverage() {
        let fx = fixture(&["Figure 3", "Table 1"]);
        let scoring = ScoringSummary {
            score: Score::new(3).unwrap(),
            assessment_incomplete: false,
            items: BTreeMap::from([("Figure 3".to_string(), ItemScoring::default())]),
        };
        let v = validate_scoring_summary(&scoring, &fx.input);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].item.as_deref(), Some("Table 1"));

        let exec = ExecutionSummary::stage_failed(fx.input.item_names(), "none");
        let mut report = Report::from_summaries(fx.input.item_names(), None, &exec, &scoring, "t");
        assert_eq!(validate_report(&report, &fx.input, Some(&scoring)), vec![]);
        report.overall_score = Score::new(4).unwrap();
        assert_eq!(
            validate_report(&report, &fx.input, Some(&scoring))[0].kind,
            ViolationKind::ScoreMismatch
        );
    }

    #[test]
    fn malformed_file_is_a_violation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scoring_summary.json");
        std::fs::write(&path, r#"{"score": 9}"#).unwrap();
        let err = load::<ScoringSummary>(&path).unwrap_err();
        assert_eq!(err[0].kind, ViolationKind::Malformed);
    }
}
