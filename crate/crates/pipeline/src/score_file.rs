//! The single file a benchmark harness reads to collect the score.

use std::path::{Path, PathBuf};

use repro_core::json::write_canonical;
use repro_core::Score;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreFormat {
    /// File name, written at the workspace root.
    pub name: String,
    /// Key holding the integer score.
    pub field: String,
}

impl Default for ScoreFormat {
    fn default() -> Self {
        Self {
            name: "reproducibility_score.json".into(),
            field: "score".into(),
        }
    }
}

/// Writes `{"<field>": score}` to `dir/<name>`, replacing any earlier file.
pub fn emit_score_file(score: Score, dir: &Path, format: &ScoreFormat) -> std::io::Result<PathBuf> {
    let path = dir.join(&format.name);
    let mut body = Map::new();
    body.insert(format.field.clone(), Value::from(score.get()));
    write_canonical(&path, &Value::Object(body))?;
    Ok(path)
}

/// Reads a score file back; `Err` carries the reason it is not valid.
pub fn read_score_file(dir: &Path, format: &ScoreFormat) -> Result<Score, String> {
    let path = dir.join(&format.name);
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let raw = value
        .get(&format.field)
        .and_then(Value::as_i64)
        .ok_or_else(|| format!("{}: no integer field {:?}", path.display(), format.field))?;
    Score::try_from(raw).map_err(|_| format!("{}: score {raw} is outside 1..4", path.display()))
}
