//! PDF writing, rasterization and element extraction.

pub mod extract;
pub mod images;
pub mod render;
pub mod writer;

use std::path::Path;

use lopdf::Document;

use crate::error::ToolError;

/// Opens a PDF, separating password-protected files from broken ones.
pub fn load(path: &Path) -> Result<Document, ToolError> {
    let bytes = std::fs::read(path).map_err(|e| ToolError::io(path, e))?;
    load_bytes(&bytes)
}

pub fn load_bytes(bytes: &[u8]) -> Result<Document, ToolError> {
    if !bytes.starts_with(b"%PDF") && !bytes[..bytes.len().min(1024)].windows(4).any(|w| w == b"%PDF") {
        return Err(ToolError::UnreadablePdf("missing %PDF header".into()));
    }
    match Document::load_mem(bytes) {
        Ok(doc) => {
            if doc.is_encrypted() && doc.encryption_state.is_none() {
                return Err(ToolError::EncryptedPdf);
            }
            if doc.get_pages().is_empty() {
                return Err(ToolError::UnreadablePdf("document has no pages".into()));
            }
            Ok(doc)
        }
        Err(err) => {
            if contains(bytes, b"/Encrypt") {
                Err(ToolError::EncryptedPdf)
            } else {
                Err(ToolError::UnreadablePdf(err.to_string()))
            }
        }
    }
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Page size in points from the (possibly inherited) MediaBox.
pub fn page_size(doc: &Document, page_id: lopdf::ObjectId) -> (f32, f32) {
    let mut current = Some(page_id);
    let mut guard = 0;
    while let Some(id) = current {
        guard += 1;
        if guard > 32 {
            break;
        }
        let Ok(dict) = doc.get_dictionary(id) else { break };
        if let Ok(obj) = dict.get(b"MediaBox") {
            if let Ok((_, lopdf::Object::Array(values))) = doc.dereference(obj) {
                let nums: Vec<f32> = values
                    .iter()
                    .filter_map(|v| doc.dereference(v).ok().and_then(|(_, o)| o.as_float().ok()))
                    .collect();
                if nums.len() == 4 {
                    return ((nums[2] - nums[0]).abs(), (nums[3] - nums[1]).abs());
                }
            }
        }
        current = dict.get(b"Parent").and_then(|p| p.as_reference()).ok();
    }
    (612.0, 792.0)
}
