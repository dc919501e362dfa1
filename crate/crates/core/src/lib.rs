//! Domain model for the reproducibility assessor.
//!
//! Everything exchanged between pipeline stages lives here: the assessment
//! input, the four persisted deliverables, the scoring rubric, the cost
//! ledger, and the chat-with-tools model client used by every agent.

pub mod clock;
pub mod deliverables;
pub mod input;
pub mod json;
pub mod ledger;
pub mod llm;
pub mod paths;
pub mod report;
pub mod rubric;
pub mod score;
pub mod validate;

pub use clock::{Clock, FixedClock, SystemClock};
pub use deliverables::{
    ArtifactKind, CodeQuality, Consistency, ExecutionSummary, ItemExecution, ItemScoring, PlanEntry,
    ReproducedArtifact, ReproductionPlan, ScoringSummary,
};
pub use input::{AssessmentInput, InputError, ReproductionItem};
pub use ledger::{CostLedger, LedgerEntry};
pub use report::{Report, ReportItem};
pub use score::Score;
pub use validate::{Violation, ViolationKind};

/// Keys that appear at the top level of deliverable files next to item
/// entries. Item names may not collide with them.
pub const RESERVED_KEYS: &[&str] = &[
    "setup_script",
    "code_quality_assessment",
    "reason",
    "score",
    "assessment_incomplete",
];

/// File names of the persisted deliverables, relative to the workspace root.
pub mod files {
    pub const PLAN: &str = "reproduction_plan.json";
    pub const EXECUTION_SUMMARY: &str = "execution_summary.json";
    pub const SCORING_SUMMARY: &str = "scoring_summary.json";
    pub const REPORT_JSON: &str = "report.json";
    pub const REPORT_MD: &str = "report.md";
    pub const REPORT_PDF: &str = "report.pdf";
    pub const MANIFEST: &str = "manifest.json";
}
