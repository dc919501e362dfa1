//! Turning heterogeneous artifacts into images the scoring agent can view.

use std::fs;
use std::path::{Path, PathBuf};

use base64::Engine;
use image::imageops::FilterType;
use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::ToolError;
use crate::pdf::{self, extract::save_png};
use crate::raster::{self, BLACK, GRID, HEADER_FILL, WHITE};

pub const SUPPORTED: &[&str] = &["pdf", "csv", "tsv", "xlsx", "txt", "log", "png", "jpg", "jpeg"];

const GLYPH_SCALE: i64 = 2;
const CELL_PAD: i64 = 6;
const TEXT_LINES_PER_IMAGE: usize = 120;

/// Where each table cell was drawn; lets tests and agents check the
/// rendered text without OCR.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellLog {
    pub source: PathBuf,
    pub image: PathBuf,
    pub rows: Vec<Vec<String>>,
    pub cells: Vec<CellBox>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellBox {
    pub row: usize,
    pub col: usize,
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

fn extension(path: &Path) -> String {
    path.extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default()
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "artifact".into())
}

/// Renders `artifact` into one or more PNGs under `out_dir`. Images are
/// returned as-is.
pub fn convert_to_image(artifact: &Path, out_dir: &Path, dpi: u32) -> Result<Vec<PathBuf>, ToolError> {
    let ext = extension(artifact);
    if !SUPPORTED.contains(&ext.as_str()) {
        return Err(ToolError::UnsupportedFormat(if ext.is_empty() {
            artifact.display().to_string()
        } else {
            format!(".{ext}")
        }));
    }
    if !artifact.is_file() {
        return Err(ToolError::NotFound(artifact.to_path_buf()));
    }
    match ext.as_str() {
        "png" | "jpg" | "jpeg" => Ok(vec![artifact.to_path_buf()]),
        "pdf" => {
            let doc = pdf::load(artifact)?;
            fs::create_dir_all(out_dir).map_err(|e| ToolError::io(out_dir, e))?;
            let pages = doc.get_pages();
            let multi = pages.len() > 1;
            let mut out = Vec::new();
            for (&n, &id) in &pages {
                let rendered = pdf::render::render_page(&doc, id, dpi);
                let name = if multi {
                    format!("{}_converted_p{n:03}.png", stem(artifact))
                } else {
                    format!("{}_converted.png", stem(artifact))
                };
                let path = out_dir.join(name);
                save_png(&rendered.image, &path)?;
                out.push(path);
            }
            Ok(out)
        }
        "csv" | "tsv" => {
            let rows = read_delimited(artifact, if ext == "tsv" { b'\t' } else { b',' })?;
            let path = out_dir.join(format!("{}_converted.png", stem(artifact)));
            render_table_file(artifact, &rows, &path)?;
            Ok(vec![path])
        }
        "xlsx" => {
            let sheets = read_xlsx(artifact)?;
            let multi = sheets.len() > 1;
            let mut out = Vec::new();
            for (i, rows) in sheets.iter().enumerate() {
                let name = if multi {
                    format!("{}_converted_s{:02}.png", stem(artifact), i + 1)
                } else {
                    format!("{}_converted.png", stem(artifact))
                };
                let path = out_dir.join(name);
                render_table_file(artifact, rows, &path)?;
                out.push(path);
            }
            Ok(out)
        }
        _ => {
            let text = crate::text::read_text(artifact)?;
            fs::create_dir_all(out_dir).map_err(|e| ToolError::io(out_dir, e))?;
            let lines: Vec<&str> = text.lines().collect();
            let chunks: Vec<&[&str]> = if lines.is_empty() {
                vec![&[][..]]
            } else {
                lines.chunks(TEXT_LINES_PER_IMAGE).collect()
            };
            let multi = chunks.len() > 1;
            let mut out = Vec::new();
            for (i, chunk) in chunks.iter().enumerate() {
                let name = if multi {
                    format!("{}_converted_p{:03}.png", stem(artifact), i + 1)
                } else {
                    format!("{}_converted.png", stem(artifact))
                };
                let path = out_dir.join(name);
                save_png(&render_text(chunk), &path)?;
                out.push(path);
            }
            Ok(out)
        }
    }
}

fn read_delimited(path: &Path, delimiter: u8) -> Result<Vec<Vec<String>>, ToolError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .from_path(path)
        .map_err(|e| ToolError::RenderFailure(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| ToolError::RenderFailure(format!("{}: {e}", path.display())))?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

fn read_xlsx(path: &Path) -> Result<Vec<Vec<Vec<String>>>, ToolError> {
    use calamine::{open_workbook_auto, Reader};
    let mut book =
        open_workbook_auto(path).map_err(|e| ToolError::RenderFailure(format!("{}: {e}", path.display())))?;
    let mut sheets = Vec::new();
    for name in book.sheet_names().to_vec() {
        let range = book
            .worksheet_range(&name)
            .map_err(|e| ToolError::RenderFailure(format!("{name}: {e}")))?;
        let rows: Vec<Vec<String>> = range
            .rows()
            .map(|r| r.iter().map(|c| c.to_string()).collect())
            .collect();
        sheets.push(rows);
    }
    if sheets.is_empty() {
        sheets.push(Vec::new());
    }
    Ok(sheets)
}

fn render_table_file(source: &Path, rows: &[Vec<String>], path: &Path) -> Result<(), ToolError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| ToolError::io(parent, e))?;
    }
    let (img, cells) = render_table(rows);
    save_png(&img, path)?;
    let log = CellLog {
        source: source.to_path_buf(),
        image: path.to_path_buf(),
        rows: rows.to_vec(),
        cells,
    };
    let log_path = path.with_extension("cells.json");
    let text = serde_json::to_string_pretty(&log).expect("cell log serializes");
    fs::write(&log_path, text + "\n").map_err(|e| ToolError::io(&log_path, e))
}

/// Fixed monospace grid; the first row is shaded as a header.
pub fn render_table(rows: &[Vec<String>]) -> (RgbImage, Vec<CellBox>) {
    let ncols = rows.iter().map(Vec::len).max().unwrap_or(0).max(1);
    let nrows = rows.len().max(1);
    let char_w = 8 * GLYPH_SCALE;
    let row_h = 8 * GLYPH_SCALE + 2 * CELL_PAD;
    let widths: Vec<i64> = (0..ncols)
        .map(|c| {
            let chars = rows
                .iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
                .max(1) as i64;
            chars * char_w + 2 * CELL_PAD
        })
        .collect();
    let total_w = widths.iter().sum::<i64>() + 1;
    let total_h = row_h * nrows as i64 + 1;
    let mut img = RgbImage::from_pixel(total_w as u32, total_h as u32, WHITE);
    raster::fill_rect(&mut img, 0, 0, total_w, row_h, HEADER_FILL);
    let mut cells = Vec::new();
    let mut y = 0;
    for r in 0..nrows {
        let mut x = 0;
        for (c, &w) in widths.iter().enumerate() {
            if let Some(text) = rows.get(r).and_then(|row| row.get(c)) {
                raster::draw_text(&mut img, x + CELL_PAD, y + CELL_PAD, text, GLYPH_SCALE, BLACK);
                cells.push(CellBox {
                    row: r,
                    col: c,
                    x: x as u32,
                    y: y as u32,
                    w: w as u32,
                    h: row_h as u32,
                });
            }
            x += w;
        }
        y += row_h;
    }
    let mut x = 0;
    for &w in &widths {
        raster::vline(&mut img, x, 0, total_h, GRID);
        x += w;
    }
    raster::vline(&mut img, total_w - 1, 0, total_h, GRID);
    for r in 0..=nrows as i64 {
        raster::hline(&mut img, 0, total_w, (r * row_h).min(total_h - 1), GRID);
    }
    (img, cells)
}

fn render_text(lines: &[&str]) -> RgbImage {
    let scale = GLYPH_SCALE;
    let line_h = 8 * scale + 4;
    let cols = lines
        .iter()
        .map(|l| l.replace('\t', "    ").chars().count())
        .max()
        .unwrap_or(0)
        .clamp(20, 240) as i64;
    let w = cols * 8 * scale + 2 * CELL_PAD;
    let h = lines.len().max(1) as i64 * line_h + 2 * CELL_PAD;
    let mut img = RgbImage::from_pixel(w as u32, h as u32, WHITE);
    for (i, line) in lines.iter().enumerate() {
        let expanded: String = line.replace('\t', "    ").chars().take(cols as usize).collect();
        raster::draw_text(
            &mut img,
            CELL_PAD,
            CELL_PAD + i as i64 * line_h,
            &expanded,
            scale,
            BLACK,
        );
    }
    img
}

/// Target size when the longest side must not exceed `cap`.
pub fn fit_within(width: u32, height: u32, cap: u32) -> (u32, u32) {
    let longest = width.max(height);
    if longest <= cap || longest == 0 {
        return (width, height);
    }
    let scale = |v: u32| (((v as u64 * cap as u64) as f64 / longest as f64).round() as u32).max(1);
    (scale(width), scale(height))
}

#[derive(Debug, Clone)]
pub struct ViewedImage {
    pub png_base64: String,
    pub width: u32,
    pub height: u32,
    pub original: (u32, u32),
}

/// Loads an image and downscales it so neither side exceeds `cap`.
pub fn load_for_view(path: &Path, cap: u32) -> Result<ViewedImage, ToolError> {
    if !path.is_file() {
        return Err(ToolError::NotFound(path.to_path_buf()));
    }
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::Unsupported(_) | image::ImageError::Decoding(_) => {
            ToolError::UnsupportedFormat(format!("{}: {e}", path.display()))
        }
        other => ToolError::RenderFailure(other.to_string()),
    })?;
    let original = (img.width(), img.height());
    let (w, h) = fit_within(original.0, original.1, cap);
    let img = if (w, h) == original {
        img
    } else {
        img.resize_exact(w, h, FilterType::Triangle)
    };
    let mut bytes = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
        .map_err(|e| ToolError::RenderFailure(e.to_string()))?;
    Ok(ViewedImage {
        png_base64: base64::engine::general_purpose::STANDARD.encode(bytes),
        width: w,
        height: h,
        original,
    })
}
