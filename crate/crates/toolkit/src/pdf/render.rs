//! A small rasterizer for PDF page content streams.
//!
//! Covers paths, fills, strokes, image XObjects, form XObjects and text.
//! Text is drawn with the built-in bitmap font scaled into each glyph's
//! advance box, which keeps layout faithful without embedding font
//! programs. Shadings, patterns and clipping are not interpreted.

use std::collections::HashMap;

use image::{Rgb, RgbImage};
use lopdf::content::{Content, Operation};
use lopdf::{Dictionary, Document, Object, ObjectId, Stream};

use super::images;
use crate::raster;

type Matrix = [f32; 6];

const IDENTITY: Matrix = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
const MAX_FORM_DEPTH: usize = 8;

fn mul(m: &Matrix, n: &Matrix) -> Matrix {
    [
        m[0] * n[0] + m[1] * n[2],
        m[0] * n[1] + m[1] * n[3],
        m[2] * n[0] + m[3] * n[2],
        m[2] * n[1] + m[3] * n[3],
        m[4] * n[0] + m[5] * n[2] + n[4],
        m[4] * n[1] + m[5] * n[3] + n[5],
    ]
}

fn apply(m: &Matrix, x: f32, y: f32) -> (f32, f32) {
    (m[0] * x + m[2] * y + m[4], m[1] * x + m[3] * y + m[5])
}

fn invert(m: &Matrix) -> Option<Matrix> {
    let det = m[0] * m[3] - m[1] * m[2];
    if det.abs() < 1e-12 {
        return None;
    }
    let a = m[3] / det;
    let b = -m[1] / det;
    let c = -m[2] / det;
    let d = m[0] / det;
    Some([a, b, c, d, -(m[4] * a + m[5] * c), -(m[4] * b + m[5] * d)])
}

#[derive(Debug, Clone)]
struct FontInfo {
    first_char: i64,
    widths: Vec<f32>,
    default_width: f32,
    two_byte: bool,
}

impl FontInfo {
    fn width(&self, code: u32) -> f32 {
        let idx = code as i64 - self.first_char;
        if idx >= 0 && (idx as usize) < self.widths.len() {
            self.widths[idx as usize]
        } else {
            self.default_width
        }
    }

    fn from_dict(doc: &Document, dict: &Dictionary) -> Self {
        let subtype = dict.get(b"Subtype").and_then(Object::as_name).unwrap_or(b"");
        let base = dict.get(b"BaseFont").and_then(Object::as_name).unwrap_or(b"");
        if subtype == b"Type0" {
            let dw = dict
                .get(b"DescendantFonts")
                .ok()
                .and_then(|o| doc.dereference(o).ok())
                .and_then(|(_, o)| o.as_array().ok().and_then(|a| a.first().cloned()))
                .and_then(|o| doc.dereference(&o).ok().and_then(|(_, d)| d.as_dict().ok().cloned()))
                .and_then(|d| d.get(b"DW").and_then(Object::as_float).ok())
                .unwrap_or(1000.0);
            return FontInfo {
                first_char: 0,
                widths: Vec::new(),
                default_width: dw,
                two_byte: true,
            };
        }
        let courier = String::from_utf8_lossy(base).contains("Courier");
        let first_char = dict.get(b"FirstChar").and_then(Object::as_i64).unwrap_or(0);
        let widths = dict
            .get(b"Widths")
            .ok()
            .and_then(|o| doc.dereference(o).ok())
            .and_then(|(_, o)| o.as_array().ok().cloned())
            .map(|arr| {
                arr.iter()
                    .map(|w| {
                        doc.dereference(w)
                            .ok()
                            .and_then(|(_, o)| o.as_float().ok())
                            .unwrap_or(500.0)
                    })
                    .collect()
            })
            .unwrap_or_default();
        FontInfo {
            first_char,
            widths,
            default_width: if courier { 600.0 } else { 500.0 },
            two_byte: false,
        }
    }
}

#[derive(Debug, Clone)]
struct GState {
    ctm: Matrix,
    fill: Rgb<u8>,
    stroke: Rgb<u8>,
    line_width: f32,
    font: Option<FontInfo>,
    font_size: f32,
    char_spacing: f32,
    word_spacing: f32,
    hscale: f32,
    leading: f32,
    rise: f32,
    render_mode: i64,
}

impl GState {
    fn new(ctm: Matrix) -> Self {
        Self {
            ctm,
            fill: raster::BLACK,
            stroke: raster::BLACK,
            line_width: 1.0,
            font: None,
            font_size: 0.0,
            char_spacing: 0.0,
            word_spacing: 0.0,
            hscale: 1.0,
            leading: 0.0,
            rise: 0.0,
            render_mode: 0,
        }
    }
}

/// Image XObject drawn on a page, in content-stream order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DrawnImage {
    pub id: ObjectId,
}

pub struct PageRender {
    pub image: RgbImage,
    pub images: Vec<DrawnImage>,
    pub warnings: Vec<String>,
}

struct Renderer<'a> {
    doc: &'a Document,
    img: RgbImage,
    gs: GState,
    stack: Vec<GState>,
    subpaths: Vec<Vec<(f32, f32)>>,
    current: Vec<(f32, f32)>,
    tm: Matrix,
    tlm: Matrix,
    drawn: Vec<DrawnImage>,
    warnings: Vec<String>,
    font_cache: HashMap<Vec<u8>, FontInfo>,
    image_cache: HashMap<ObjectId, Option<RgbImage>>,
}

/// Renders one page at `dpi`.
pub fn render_page(doc: &Document, page_id: ObjectId, dpi: u32) -> PageRender {
    let (w, h) = super::page_size(doc, page_id);
    let scale = dpi as f32 / 72.0;
    let px_w = ((w * scale).round() as u32).clamp(1, 20_000);
    let px_h = ((h * scale).round() as u32).clamp(1, 20_000);
    // User space to device pixels with a flipped y axis.
    let device: Matrix = [scale, 0.0, 0.0, -scale, 0.0, h * scale];
    let mut r = Renderer {
        doc,
        img: RgbImage::from_pixel(px_w, px_h, raster::WHITE),
        gs: GState::new(device),
        stack: Vec::new(),
        subpaths: Vec::new(),
        current: Vec::new(),
        tm: IDENTITY,
        tlm: IDENTITY,
        drawn: Vec::new(),
        warnings: Vec::new(),
        font_cache: HashMap::new(),
        image_cache: HashMap::new(),
    };
    let resources = page_resources(doc, page_id);
    match doc.get_page_content(page_id) {
        Ok(data) => r.run(&data, &resources, 0),
        Err(e) => r.warnings.push(format!("page content: {e}")),
    }
    PageRender {
        image: r.img,
        images: r.drawn,
        warnings: r.warnings,
    }
}

/// Merged resource dictionary for a page, including inherited entries.
fn page_resources(doc: &Document, page_id: ObjectId) -> Dictionary {
    let mut merged = Dictionary::new();
    if let Ok((own, inherited)) = doc.get_page_resources(page_id) {
        for id in inherited.iter().rev() {
            if let Ok(d) = doc.get_dictionary(*id) {
                merge(&mut merged, d);
            }
        }
        if let Some(d) = own {
            merge(&mut merged, d);
        }
    }
    merged
}

fn merge(into: &mut Dictionary, from: &Dictionary) {
    for (k, v) in from.iter() {
        into.set(k.clone(), v.clone());
    }
}

impl<'a> Renderer<'a> {
    fn run(&mut self, data: &[u8], resources: &Dictionary, depth: usize) {
        let content = match Content::decode(data) {
            Ok(c) => c,
            Err(e) => {
                self.warnings.push(format!("content stream: {e}"));
                return;
            }
        };
        for op in &content.operations {
            self.op(op, resources, depth);
        }
    }

    fn nums(&self, op: &Operation) -> Vec<f32> {
        op.operands.iter().filter_map(|o| o.as_float().ok()).collect()
    }

    fn op(&mut self, op: &Operation, res: &Dictionary, depth: usize) {
        let n = self.nums(op);
        let at = |i: usize| n.get(i).copied().unwrap_or(0.0);
        match op.operator.as_str() {
            "q" => self.stack.push(self.gs.clone()),
            "Q" => {
                if let Some(g) = self.stack.pop() {
                    self.gs = g;
                }
            }
            "cm" if n.len() == 6 => {
                let m = [at(0), at(1), at(2), at(3), at(4), at(5)];
                self.gs.ctm = mul(&m, &self.gs.ctm);
            }
            "w" => self.gs.line_width = at(0),
            "g" => self.gs.fill = gray(at(0)),
            "G" => self.gs.stroke = gray(at(0)),
            "rg" => self.gs.fill = rgb(at(0), at(1), at(2)),
            "RG" => self.gs.stroke = rgb(at(0), at(1), at(2)),
            "k" => self.gs.fill = cmyk(at(0), at(1), at(2), at(3)),
            "K" => self.gs.stroke = cmyk(at(0), at(1), at(2), at(3)),
            "sc" | "scn" => {
                if let Some(c) = color_from(&n) {
                    self.gs.fill = c;
                }
            }
            "SC" | "SCN" => {
                if let Some(c) = color_from(&n) {
                    self.gs.stroke = c;
                }
            }
            "m" => {
                self.flush_subpath();
                self.current.push(self.dev(at(0), at(1)));
            }
            "l" => self.current.push(self.dev(at(0), at(1))),
            "c" if n.len() == 6 => self.curve(at(0), at(1), at(2), at(3), at(4), at(5)),
            "v" if n.len() == 4 => {
                let start = self.current.last().copied();
                if let Some(p0) = start.and_then(|p| self.user(p)) {
                    self.curve(p0.0, p0.1, at(0), at(1), at(2), at(3));
                }
            }
            "y" if n.len() == 4 => self.curve(at(0), at(1), at(2), at(3), at(2), at(3)),
            "h" => {
                if let Some(&first) = self.current.first() {
                    self.current.push(first);
                }
            }
            "re" if n.len() == 4 => {
                self.flush_subpath();
                let (x, y, w, h) = (at(0), at(1), at(2), at(3));
                self.subpaths.push(vec![
                    self.dev(x, y),
                    self.dev(x + w, y),
                    self.dev(x + w, y + h),
                    self.dev(x, y + h),
                    self.dev(x, y),
                ]);
            }
            "f" | "F" | "f*" => {
                let even_odd = op.operator == "f*";
                self.fill(even_odd);
                self.clear_path();
            }
            "S" => {
                self.stroke();
                self.clear_path();
            }
            "s" => {
                if let Some(&first) = self.current.first() {
                    self.current.push(first);
                }
                self.stroke();
                self.clear_path();
            }
            "B" | "B*" | "b" | "b*" => {
                if op.operator.starts_with('b') {
                    if let Some(&first) = self.current.first() {
                        self.current.push(first);
                    }
                }
                self.fill(op.operator.ends_with('*'));
                self.stroke();
                self.clear_path();
            }
            "n" => self.clear_path(),
            "BT" => {
                self.tm = IDENTITY;
                self.tlm = IDENTITY;
            }
            "Tf" => {
                // The font name is not numeric, so the size is the first number.
                self.gs.font_size = at(0);
                if let Some(name) = op.operands.first().and_then(|o| o.as_name().ok()) {
                    self.gs.font = self.font(res, name);
                }
            }
            "Tc" => self.gs.char_spacing = at(0),
            "Tw" => self.gs.word_spacing = at(0),
            "Tz" => self.gs.hscale = at(0) / 100.0,
            "TL" => self.gs.leading = at(0),
            "Ts" => self.gs.rise = at(0),
            "Tr" => self.gs.render_mode = at(0) as i64,
            "Td" => self.move_text(at(0), at(1)),
            "TD" => {
                self.gs.leading = -at(1);
                self.move_text(at(0), at(1));
            }
            "Tm" if n.len() == 6 => {
                self.tm = [at(0), at(1), at(2), at(3), at(4), at(5)];
                self.tlm = self.tm;
            }
            "T*" => self.move_text(0.0, -self.gs.leading),
            "Tj" => {
                if let Some(Object::String(bytes, _)) = op.operands.first() {
                    self.show(bytes);
                }
            }
            "'" => {
                self.move_text(0.0, -self.gs.leading);
                if let Some(Object::String(bytes, _)) = op.operands.first() {
                    self.show(bytes);
                }
            }
            "\"" => {
                self.gs.word_spacing = at(0);
                self.gs.char_spacing = at(1);
                self.move_text(0.0, -self.gs.leading);
                if let Some(Object::String(bytes, _)) = op.operands.get(2) {
                    self.show(bytes);
                }
            }
            "TJ" => {
                if let Some(Object::Array(items)) = op.operands.first() {
                    for item in items {
                        match item {
                            Object::String(bytes, _) => self.show(bytes),
                            other => {
                                if let Ok(adj) = other.as_float() {
                                    let tx = -adj / 1000.0 * self.gs.font_size * self.gs.hscale;
                                    self.tm = mul(&[1.0, 0.0, 0.0, 1.0, tx, 0.0], &self.tm);
                                }
                            }
                        }
                    }
                }
            }
            "Do" => {
                if let Some(name) = op.operands.first().and_then(|o| o.as_name().ok()) {
                    self.xobject(res, name, depth);
                }
            }
            "BI" => {
                if let Some(Object::Stream(s)) = op.operands.first() {
                    let s = expand_inline(s);
                    match images::decode(self.doc, &s) {
                        Ok(img) => self.draw_image(&img),
                        Err(e) => self.warnings.push(format!("inline image: {e}")),
                    }
                }
            }
            _ => {}
        }
    }

    fn dev(&self, x: f32, y: f32) -> (f32, f32) {
        apply(&self.gs.ctm, x, y)
    }

    fn user(&self, p: (f32, f32)) -> Option<(f32, f32)> {
        invert(&self.gs.ctm).map(|inv| apply(&inv, p.0, p.1))
    }

    fn curve(&mut self, x1: f32, y1: f32, x2: f32, y2: f32, x3: f32, y3: f32) {
        let Some(&p0) = self.current.last() else { return };
        let p1 = self.dev(x1, y1);
        let p2 = self.dev(x2, y2);
        let p3 = self.dev(x3, y3);
        for i in 1..=12 {
            let t = i as f32 / 12.0;
            let u = 1.0 - t;
            let b = |a: f32, b: f32, c: f32, d: f32| {
                u * u * u * a + 3.0 * u * u * t * b + 3.0 * u * t * t * c + t * t * t * d
            };
            self.current
                .push((b(p0.0, p1.0, p2.0, p3.0), b(p0.1, p1.1, p2.1, p3.1)));
        }
    }

    fn flush_subpath(&mut self) {
        if !self.current.is_empty() {
            let sub = std::mem::take(&mut self.current);
            self.subpaths.push(sub);
        }
    }

    fn clear_path(&mut self) {
        self.subpaths.clear();
        self.current.clear();
    }

    fn fill(&mut self, even_odd: bool) {
        self.flush_subpath();
        let color = self.gs.fill;
        let mut edges = Vec::new();
        let (mut min_x, mut min_y, mut max_x, mut max_y) = (f32::MAX, f32::MAX, f32::MIN, f32::MIN);
        for sub in &self.subpaths {
            if sub.len() < 2 {
                continue;
            }
            let n = sub.len();
            for i in 0..n {
                let a = sub[i];
                let b = sub[(i + 1) % n];
                min_x = min_x.min(a.0);
                max_x = max_x.max(a.0);
                min_y = min_y.min(a.1);
                max_y = max_y.max(a.1);
                if (a.1 - b.1).abs() > f32::EPSILON {
                    edges.push((a, b));
                }
            }
        }
        if min_x > max_x {
            return;
        }
        // Hairline fills would vanish under centre sampling.
        if max_x - min_x < 1.0 || max_y - min_y < 1.0 {
            let x0 = min_x.floor() as i64;
            let y0 = min_y.floor() as i64;
            let w = ((max_x - min_x).ceil() as i64).max(1);
            let h = ((max_y - min_y).ceil() as i64).max(1);
            raster::fill_rect(&mut self.img, x0, y0, w, h, color);
            return;
        }
        let height = self.img.height() as i64;
        let width = self.img.width() as f32;
        let y_start = (min_y.floor() as i64).max(0);
        let y_end = (max_y.ceil() as i64).min(height);
        let mut crossings: Vec<(f32, i32)> = Vec::new();
        for py in y_start..y_end {
            let sy = py as f32 + 0.5;
            crossings.clear();
            for &(a, b) in &edges {
                let (lo, hi, dir) = if a.1 < b.1 { (a, b, 1) } else { (b, a, -1) };
                if sy >= lo.1 && sy < hi.1 {
                    let x = lo.0 + (sy - lo.1) * (hi.0 - lo.0) / (hi.1 - lo.1);
                    crossings.push((x, dir));
                }
            }
            crossings.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut winding = 0;
            for pair in crossings.windows(2) {
                winding += pair[0].1;
                let inside = if even_odd { winding % 2 != 0 } else { winding != 0 };
                if inside {
                    let x0 = (pair[0].0 - 0.5).ceil().max(0.0);
                    let x1 = (pair[1].0 - 0.5).floor().min(width - 1.0);
                    if x1 >= x0 {
                        for px in x0 as u32..=x1 as u32 {
                            self.img.put_pixel(px, py as u32, color);
                        }
                    }
                }
            }
        }
    }

    fn stroke(&mut self) {
        self.flush_subpath();
        let color = self.gs.stroke;
        let m = &self.gs.ctm;
        let scale = ((m[0] * m[3] - m[1] * m[2]).abs()).sqrt();
        let thickness = (self.gs.line_width * scale).max(1.0);
        let subpaths = std::mem::take(&mut self.subpaths);
        for sub in &subpaths {
            for seg in sub.windows(2) {
                self.segment(seg[0], seg[1], thickness, color);
            }
        }
        self.subpaths = subpaths;
    }

    fn segment(&mut self, a: (f32, f32), b: (f32, f32), thickness: f32, color: Rgb<u8>) {
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        let steps = (len * 2.0).ceil().max(1.0) as usize;
        let half = thickness / 2.0;
        let size = thickness.round().max(1.0) as i64;
        for i in 0..=steps {
            let t = i as f32 / steps as f32;
            let x = a.0 + (b.0 - a.0) * t - half;
            let y = a.1 + (b.1 - a.1) * t - half;
            raster::fill_rect(&mut self.img, x.round() as i64, y.round() as i64, size, size, color);
        }
    }

    fn move_text(&mut self, tx: f32, ty: f32) {
        self.tlm = mul(&[1.0, 0.0, 0.0, 1.0, tx, ty], &self.tlm);
        self.tm = self.tlm;
    }

    fn font(&mut self, res: &Dictionary, name: &[u8]) -> Option<FontInfo> {
        let fonts = res
            .get(b"Font")
            .ok()
            .and_then(|o| self.doc.dereference(o).ok())
            .and_then(|(_, o)| o.as_dict().ok())?;
        let (id, obj) = self.doc.dereference(fonts.get(name).ok()?).ok()?;
        let key = match id {
            Some((num, gen)) => format!("{num} {gen}").into_bytes(),
            None => name.to_vec(),
        };
        if let Some(f) = self.font_cache.get(&key) {
            return Some(f.clone());
        }
        let info = FontInfo::from_dict(self.doc, obj.as_dict().ok()?);
        self.font_cache.insert(key, info.clone());
        Some(info)
    }

    fn show(&mut self, bytes: &[u8]) {
        let font = self.gs.font.clone().unwrap_or(FontInfo {
            first_char: 0,
            widths: Vec::new(),
            default_width: 500.0,
            two_byte: false,
        });
        let size = self.gs.font_size;
        let th = self.gs.hscale;
        let codes: Vec<u32> = if font.two_byte {
            bytes
                .chunks(2)
                .map(|c| ((c[0] as u32) << 8) | *c.get(1).unwrap_or(&0) as u32)
                .collect()
        } else {
            bytes.iter().map(|&b| b as u32).collect()
        };
        for code in codes {
            let w0 = font.width(code) / 1000.0;
            let visible = self.gs.render_mode != 3 && self.gs.render_mode != 7;
            if visible && size != 0.0 {
                let trm = mul(
                    &mul(&[size * th, 0.0, 0.0, size, 0.0, self.gs.rise], &self.tm),
                    &self.gs.ctm,
                );
                if font.two_byte {
                    self.blot(&trm, w0);
                } else {
                    self.glyph(&trm, w0, decode_char(code as u8));
                }
            }
            let spacing = if !font.two_byte && code == 32 {
                self.gs.word_spacing
            } else {
                0.0
            };
            let tx = (w0 * size + self.gs.char_spacing + spacing) * th;
            self.tm = mul(&[1.0, 0.0, 0.0, 1.0, tx, 0.0], &self.tm);
        }
    }

    fn glyph(&mut self, trm: &Matrix, advance: f32, c: char) {
        if c == ' ' {
            return;
        }
        let rows = raster::glyph(c);
        let color = self.gs.fill;
        for (r, bits) in rows.iter().enumerate() {
            for col in 0..8 {
                if bits & (1 << col) == 0 {
                    continue;
                }
                let x0 = col as f32 / 8.0 * advance;
                let x1 = (col + 1) as f32 / 8.0 * advance;
                let y1 = 0.8 - r as f32 / 8.0;
                let y0 = 0.8 - (r + 1) as f32 / 8.0;
                self.cell(trm, x0, y0, x1, y1, color);
            }
        }
    }

    /// Glyphs from composite fonts cannot be mapped to characters without
    /// their CMaps, so they are drawn as x-height blocks.
    fn blot(&mut self, trm: &Matrix, advance: f32) {
        let color = self.gs.fill;
        self.cell(trm, advance * 0.1, 0.0, advance * 0.9, 0.45, color);
    }

    fn cell(&mut self, trm: &Matrix, x0: f32, y0: f32, x1: f32, y1: f32, color: Rgb<u8>) {
        let pts = [
            apply(trm, x0, y0),
            apply(trm, x1, y0),
            apply(trm, x0, y1),
            apply(trm, x1, y1),
        ];
        let min_x = pts.iter().map(|p| p.0).fold(f32::MAX, f32::min);
        let max_x = pts.iter().map(|p| p.0).fold(f32::MIN, f32::max);
        let min_y = pts.iter().map(|p| p.1).fold(f32::MAX, f32::min);
        let max_y = pts.iter().map(|p| p.1).fold(f32::MIN, f32::max);
        let x = min_x.round() as i64;
        let y = min_y.round() as i64;
        let w = ((max_x.round() as i64) - x).max(1);
        let h = ((max_y.round() as i64) - y).max(1);
        raster::fill_rect(&mut self.img, x, y, w, h, color);
    }

    fn xobject(&mut self, res: &Dictionary, name: &[u8], depth: usize) {
        let Some(xobjects) = res
            .get(b"XObject")
            .ok()
            .and_then(|o| self.doc.dereference(o).ok())
            .and_then(|(_, o)| o.as_dict().ok())
        else {
            return;
        };
        let Ok(reference) = xobjects.get(name) else { return };
        let Ok((id, obj)) = self.doc.dereference(reference) else {
            return;
        };
        let Ok(stream) = obj.as_stream() else { return };
        let subtype = stream.dict.get(b"Subtype").and_then(Object::as_name).unwrap_or(b"");
        match subtype {
            b"Image" => {
                if let Some(id) = id {
                    if !self.drawn.iter().any(|d| d.id == id) {
                        self.drawn.push(DrawnImage { id });
                    }
                    if !self.image_cache.contains_key(&id) {
                        let decoded = match images::decode(self.doc, stream) {
                            Ok(img) => Some(img),
                            Err(e) => {
                                self.warnings.push(format!("image {} {}: {e}", id.0, id.1));
                                None
                            }
                        };
                        self.image_cache.insert(id, decoded);
                    }
                    if let Some(Some(img)) = self.image_cache.get(&id).cloned().as_ref() {
                        self.draw_image(img);
                    }
                } else if let Ok(img) = images::decode(self.doc, stream) {
                    self.draw_image(&img);
                }
            }
            b"Form" => {
                if depth >= MAX_FORM_DEPTH {
                    self.warnings.push("form XObject nesting too deep".into());
                    return;
                }
                let saved = self.gs.clone();
                let saved_stack = self.stack.len();
                if let Ok(Object::Array(m)) = stream.dict.get(b"Matrix") {
                    let v: Vec<f32> = m.iter().filter_map(|o| o.as_float().ok()).collect();
                    if v.len() == 6 {
                        let m = [v[0], v[1], v[2], v[3], v[4], v[5]];
                        self.gs.ctm = mul(&m, &self.gs.ctm);
                    }
                }
                let form_res = stream
                    .dict
                    .get(b"Resources")
                    .ok()
                    .and_then(|o| self.doc.dereference(o).ok())
                    .and_then(|(_, o)| o.as_dict().ok().cloned())
                    .unwrap_or_else(|| res.clone());
                let data = stream.decompressed_content().unwrap_or_else(|_| stream.content.clone());
                self.run(&data, &form_res, depth + 1);
                self.stack.truncate(saved_stack);
                self.gs = saved;
            }
            _ => {}
        }
    }

    /// Maps the unit square through the CTM, sampling nearest pixels.
    fn draw_image(&mut self, src: &RgbImage) {
        let m = self.gs.ctm;
        let Some(inv) = invert(&m) else { return };
        let corners = [
            apply(&m, 0.0, 0.0),
            apply(&m, 1.0, 0.0),
            apply(&m, 0.0, 1.0),
            apply(&m, 1.0, 1.0),
        ];
        let min_x = corners.iter().map(|p| p.0).fold(f32::MAX, f32::min).floor().max(0.0) as u32;
        let max_x = corners
            .iter()
            .map(|p| p.0)
            .fold(f32::MIN, f32::max)
            .ceil()
            .min(self.img.width() as f32) as u32;
        let min_y = corners.iter().map(|p| p.1).fold(f32::MAX, f32::min).floor().max(0.0) as u32;
        let max_y = corners
            .iter()
            .map(|p| p.1)
            .fold(f32::MIN, f32::max)
            .ceil()
            .min(self.img.height() as f32) as u32;
        let (sw, sh) = (src.width() as f32, src.height() as f32);
        for py in min_y..max_y {
            for px in min_x..max_x {
                let (u, v) = apply(&inv, px as f32 + 0.5, py as f32 + 0.5);
                if !(0.0..1.0).contains(&u) || !(0.0..1.0).contains(&v) {
                    continue;
                }
                let sx = ((u * sw) as u32).min(src.width() - 1);
                let sy = (((1.0 - v) * sh) as u32).min(src.height() - 1);
                self.img.put_pixel(px, py, *src.get_pixel(sx, sy));
            }
        }
    }
}

fn decode_char(b: u8) -> char {
    match b {
        0x91 | 0x92 => '\'',
        0x93 | 0x94 => '"',
        0x95 => '*',
        0x96 | 0x97 => '-',
        0x20..=0x7e | 0xa0..=0xff => b as char,
        _ => '?',
    }
}

fn clamp_byte(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn gray(v: f32) -> Rgb<u8> {
    let g = clamp_byte(v);
    Rgb([g, g, g])
}

fn rgb(r: f32, g: f32, b: f32) -> Rgb<u8> {
    Rgb([clamp_byte(r), clamp_byte(g), clamp_byte(b)])
}

fn cmyk(c: f32, m: f32, y: f32, k: f32) -> Rgb<u8> {
    rgb((1.0 - c) * (1.0 - k), (1.0 - m) * (1.0 - k), (1.0 - y) * (1.0 - k))
}

fn color_from(n: &[f32]) -> Option<Rgb<u8>> {
    match n.len() {
        1 => Some(gray(n[0])),
        3 => Some(rgb(n[0], n[1], n[2])),
        4 => Some(cmyk(n[0], n[1], n[2], n[3])),
        _ => None,
    }
}

/// Expands inline-image abbreviations to their full dictionary keys.
fn expand_inline(s: &Stream) -> Stream {
    let mut dict = Dictionary::new();
    for (k, v) in s.dict.iter() {
        let key: &[u8] = match k.as_slice() {
            b"W" => b"Width",
            b"H" => b"Height",
            b"CS" => b"ColorSpace",
            b"BPC" => b"BitsPerComponent",
            b"F" => b"Filter",
            b"IM" => b"ImageMask",
            b"DP" => b"DecodeParms",
            b"D" => b"Decode",
            other => other,
        };
        let value = match v {
            Object::Name(n) => Object::Name(expand_name(n)),
            Object::Array(items) => Object::Array(
                items
                    .iter()
                    .map(|o| match o {
                        Object::Name(n) => Object::Name(expand_name(n)),
                        other => other.clone(),
                    })
                    .collect(),
            ),
            other => other.clone(),
        };
        dict.set(key.to_vec(), value);
    }
    Stream::new(dict, s.content.clone())
}

fn expand_name(n: &[u8]) -> Vec<u8> {
    match n {
        b"G" => b"DeviceGray".to_vec(),
        b"RGB" => b"DeviceRGB".to_vec(),
        b"CMYK" => b"DeviceCMYK".to_vec(),
        b"Fl" => b"FlateDecode".to_vec(),
        b"DCT" => b"DCTDecode".to_vec(),
        b"A85" => b"ASCII85Decode".to_vec(),
        b"LZW" => b"LZWDecode".to_vec(),
        other => other.to_vec(),
    }
}
