//! Page renders and embedded images exported in document order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{images, render};
use crate::error::ToolError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    PageRender,
    EmbeddedImage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub path: PathBuf,
    pub page: u32,
    pub kind: ElementKind,
    /// 1-based position among the page's embedded images; 0 for renders.
    pub index: u32,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementManifest {
    pub source: PathBuf,
    pub pages: u32,
    pub elements: Vec<Element>,
    /// Images that could not be decoded, with the reason.
    pub skipped: Vec<String>,
}

pub const MANIFEST_NAME: &str = "elements.json";

pub fn page_file(page: u32) -> String {
    format!("page_{page:03}.png")
}

pub fn image_file(page: u32, index: u32) -> String {
    format!("page_{page:03}_img{index:02}.png")
}

/// Renders every page of `pdf` into `out_dir` and exports the raster
/// images each page draws, in content-stream order. File names sort
/// lexicographically in document order.
pub fn extract_elements(pdf: &Path, out_dir: &Path, dpi: u32) -> Result<ElementManifest, ToolError> {
    let doc = super::load(pdf)?;
    fs::create_dir_all(out_dir).map_err(|e| ToolError::io(out_dir, e))?;
    let pages = doc.get_pages();
    let mut manifest = ElementManifest {
        source: pdf.to_path_buf(),
        pages: pages.len() as u32,
        ..Default::default()
    };
    for (&number, &page_id) in &pages {
        let rendered = render::render_page(&doc, page_id, dpi);
        let page_path = out_dir.join(page_file(number));
        save_png(&rendered.image, &page_path)?;
        manifest.elements.push(Element {
            path: page_path,
            page: number,
            kind: ElementKind::PageRender,
            index: 0,
            width: rendered.image.width(),
            height: rendered.image.height(),
        });
        let mut index = 0;
        for drawn in &rendered.images {
            let decoded = doc
                .get_object(drawn.id)
                .map_err(|e| e.to_string())
                .and_then(|o| o.as_stream().map_err(|e| e.to_string()))
                .and_then(|s| images::decode(&doc, s));
            match decoded {
                Ok(img) => {
                    index += 1;
                    let path = out_dir.join(image_file(number, index));
                    save_png(&img, &path)?;
                    manifest.elements.push(Element {
                        path,
                        page: number,
                        kind: ElementKind::EmbeddedImage,
                        index,
                        width: img.width(),
                        height: img.height(),
                    });
                }
                Err(e) => manifest
                    .skipped
                    .push(format!("page {number} object {} {}: {e}", drawn.id.0, drawn.id.1)),
            }
        }
        for w in rendered.warnings {
            tracing::debug!(page = number, "{w}");
        }
    }
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let manifest_path = out_dir.join(MANIFEST_NAME);
    fs::write(&manifest_path, text + "\n").map_err(|e| ToolError::io(&manifest_path, e))?;
    Ok(manifest)
}

pub fn save_png(img: &image::RgbImage, path: &Path) -> Result<(), ToolError> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| ToolError::RenderFailure(format!("{}: {e}", path.display())))
}
