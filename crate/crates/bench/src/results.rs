//! Results JSONL: one `InstanceResult` per line.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::BenchError;
use crate::metrics::InstanceResult;

pub fn write_jsonl(path: &Path, results: &[InstanceResult]) -> Result<(), BenchError> {
    let mut out = Vec::new();
    for r in results {
        serde_json::to_writer(&mut out, r).expect("result serializes");
        out.push(b'\n');
    }
    let mut file = fs::File::create(path).map_err(|e| BenchError::io(path, e))?;
    file.write_all(&out).map_err(|e| BenchError::io(path, e))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<InstanceResult>, BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    let mut results = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: InstanceResult =
            serde_json::from_str(line).map_err(|e| BenchError::parse(path, format!("line {}: {e}", n + 1)))?;
        r.check()
            .map_err(|e| BenchError::parse(path, format!("line {}: {e}", n + 1)))?;
        results.push(r);
    }
    Ok(results)
}
