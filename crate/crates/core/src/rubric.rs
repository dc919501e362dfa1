//! The fixed four-level reproducibility rubric.

use crate::score::Score;

const LEVELS: [(u8, &str); 4] = [
    (1, "Major findings are irreproducible."),
    (
        2,
        "Major findings are reproducible, but there are minor inconsistencies or errors in the provided code that do not change them.",
    ),
    (
        3,
        "Major findings are reproducible, with minor differences in presentation such as rounding or formatting.",
    ),
    (4, "Major findings are fully reproducible."),
];

/// Meaning of one rubric level.
pub fn meaning(score: Score) -> &'static str {
    LEVELS[score.index()].1
}

/// Markdown rendering of the rubric, embedded verbatim in prompts and reports.
pub fn rubric_text() -> String {
    let mut out = String::new();
    for (level, text) in LEVELS {
        out.push_str(&format!("- **{level}**: {text}\n"));
    }
    out
}
