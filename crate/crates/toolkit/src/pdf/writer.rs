//! Deterministic PDF output: a small page builder plus a Markdown layout
//! engine used for reports and fixtures. Fonts are the standard Courier
//! faces, so no font data is embedded and no timestamps are written.

use std::io::Write;
use std::path::Path;

use flate2::write::ZlibEncoder;
use flate2::Compression;
use image::RgbImage;
use lopdf::{dictionary, Dictionary, Document, Object, ObjectId, Stream};

use crate::error::ToolError;

pub const LETTER: (f32, f32) = (612.0, 792.0);
const MARGIN: f32 = 54.0;
/// Courier advance width as a fraction of the font size.
const CHAR_WIDTH: f32 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Face {
    Regular,
    Bold,
}

impl Face {
    fn resource(self) -> &'static str {
        match self {
            Face::Regular => "F1",
            Face::Bold => "F2",
        }
    }
}

/// One page under construction.
#[derive(Debug, Clone)]
pub struct PdfPage {
    pub size: (f32, f32),
    ops: Vec<u8>,
    images: Vec<RgbImage>,
}

impl PdfPage {
    pub fn new(size: (f32, f32)) -> Self {
        Self {
            size,
            ops: Vec::new(),
            images: Vec::new(),
        }
    }

    /// Text with its baseline at `(x, y)` in points from the bottom-left.
    pub fn text(&mut self, x: f32, y: f32, size: f32, face: Face, text: &str) -> &mut Self {
        let mut line = format!("BT /{} {} Tf {} {} Td (", face.resource(), num(size), num(x), num(y)).into_bytes();
        line.extend(escape(&win_ansi(text)));
        line.extend_from_slice(b") Tj ET\n");
        self.ops.extend(line);
        self
    }

    pub fn fill_rect(&mut self, x: f32, y: f32, w: f32, h: f32, rgb: [f32; 3]) -> &mut Self {
        self.ops.extend(
            format!(
                "q {} {} {} rg {} {} {} {} re f Q\n",
                num(rgb[0]),
                num(rgb[1]),
                num(rgb[2]),
                num(x),
                num(y),
                num(w),
                num(h)
            )
            .into_bytes(),
        );
        self
    }

    pub fn line(&mut self, from: (f32, f32), to: (f32, f32), width: f32) -> &mut Self {
        self.ops.extend(
            format!(
                "q {} w {} {} m {} {} l S Q\n",
                num(width),
                num(from.0),
                num(from.1),
                num(to.0),
                num(to.1)
            )
            .into_bytes(),
        );
        self
    }

    /// Places an image with its lower-left corner at `(x, y)`.
    pub fn image(&mut self, img: RgbImage, x: f32, y: f32, w: f32, h: f32) -> &mut Self {
        self.images.push(img);
        let name = format!("Im{}", self.images.len());
        self.ops
            .extend(format!("q {} 0 0 {} {} {} cm /{} Do Q\n", num(w), num(h), num(x), num(y), name).into_bytes());
        self
    }
}

/// Collects pages and serializes them.
#[derive(Debug, Clone, Default)]
pub struct PdfBuilder {
    pages: Vec<PdfPage>,
}

impl PdfBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, page: PdfPage) -> &mut Self {
        self.pages.push(page);
        self
    }

    pub fn page_count(&self) -> usize {
        self.pages.len()
    }

    pub fn to_document(&self) -> Document {
        let mut doc = Document::with_version("1.5");
        let pages_id = doc.new_object_id();
        let font = |base: &str| {
            dictionary! {
                "Type" => "Font",
                "Subtype" => "Type1",
                "BaseFont" => Object::Name(base.as_bytes().to_vec()),
                "Encoding" => "WinAnsiEncoding",
            }
        };
        let f1 = doc.add_object(font("Courier"));
        let f2 = doc.add_object(font("Courier-Bold"));

        let blank = [PdfPage::new(LETTER)];
        let pages: &[PdfPage] = if self.pages.is_empty() { &blank } else { &self.pages };
        let mut kids = Vec::new();
        for page in pages {
            let mut xobjects = Dictionary::new();
            for (i, img) in page.images.iter().enumerate() {
                let id = doc.add_object(image_stream(img));
                xobjects.set(format!("Im{}", i + 1), id);
            }
            let content = Stream::new(Dictionary::new(), page.ops.clone()).with_compression(false);
            let content_id = doc.add_object(content);
            let resources = dictionary! {
                "Font" => dictionary! { "F1" => f1, "F2" => f2 },
                "XObject" => xobjects,
            };
            let page_id: ObjectId = doc.add_object(dictionary! {
                "Type" => "Page",
                "Parent" => pages_id,
                "MediaBox" => vec![0.into(), 0.into(), Object::Real(page.size.0), Object::Real(page.size.1)],
                "Resources" => resources,
                "Contents" => content_id,
            });
            kids.push(Object::Reference(page_id));
        }
        let count = kids.len() as i64;
        doc.objects.insert(
            pages_id,
            Object::Dictionary(dictionary! {
                "Type" => "Pages",
                "Kids" => kids,
                "Count" => count,
            }),
        );
        let catalog = doc.add_object(dictionary! { "Type" => "Catalog", "Pages" => pages_id });
        doc.trailer.set("Root", catalog);
        doc
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, ToolError> {
        let mut doc = self.to_document();
        let mut out = Vec::new();
        doc.save_to(&mut out)
            .map_err(|e| ToolError::RenderFailure(e.to_string()))?;
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<(), ToolError> {
        let bytes = self.to_bytes()?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| ToolError::io(parent, e))?;
        }
        std::fs::write(path, bytes).map_err(|e| ToolError::io(path, e))
    }
}

fn image_stream(img: &RgbImage) -> Stream {
    let mut enc = ZlibEncoder::new(Vec::new(), Compression::new(6));
    enc.write_all(img.as_raw()).expect("in-memory write");
    let data = enc.finish().expect("in-memory write");
    let dict = dictionary! {
        "Type" => "XObject",
        "Subtype" => "Image",
        "Width" => img.width() as i64,
        "Height" => img.height() as i64,
        "ColorSpace" => "DeviceRGB",
        "BitsPerComponent" => 8,
        "Filter" => "FlateDecode",
    };
    Stream::new(dict, data).with_compression(false)
}

/// Fixed-precision number formatting so output bytes are stable.
fn num(v: f32) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Maps text to WinAnsi bytes; characters outside Latin-1 become `?`.
pub fn win_ansi(text: &str) -> Vec<u8> {
    text.chars()
        .map(|c| match c as u32 {
            0x20..=0x7e | 0xa0..=0xff => c as u32 as u8,
            0x2013 => 0x96,
            0x2014 => 0x97,
            0x2018 => 0x91,
            0x2019 => 0x92,
            0x201c => 0x93,
            0x201d => 0x94,
            0x2022 => 0x95,
            0x2026 => 0x85,
            0x09 => b' ',
            _ => b'?',
        })
        .collect()
}

fn escape(bytes: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(bytes.len());
    for &b in bytes {
        if matches!(b, b'(' | b')' | b'\\') {
            out.push(b'\\');
        }
        out.push(b);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Block {
    Heading(u8, String),
    Line { indent: usize, text: String, bullet: bool },
    Verbatim(String),
    Image { alt: String, path: String },
    Blank,
    PageBreak,
}

fn parse_markdown(md: &str) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut in_fence = false;
    for raw in md.lines() {
        let line = raw.trim_end();
        if line.trim_start().starts_with("```") {
            in_fence = !in_fence;
            continue;
        }
        if in_fence {
            blocks.push(Block::Verbatim(line.to_string()));
            continue;
        }
        let trimmed = line.trim_start();
        if trimmed.is_empty() {
            blocks.push(Block::Blank);
        } else if trimmed == "<!-- pagebreak -->" || trimmed == "\\pagebreak" {
            blocks.push(Block::PageBreak);
        } else if let Some(level) = heading_level(trimmed) {
            let text = trimmed[level as usize..].trim().trim_end_matches('#').trim();
            blocks.push(Block::Heading(level, strip_inline(text)));
        } else if let Some((alt, path)) = image_ref(trimmed) {
            blocks.push(Block::Image { alt, path });
        } else {
            let indent = (line.len() - trimmed.len()) / 2;
            let (bullet, text) = match trimmed.strip_prefix("- ").or_else(|| trimmed.strip_prefix("* ")) {
                Some(rest) => (true, rest),
                None => (false, trimmed),
            };
            blocks.push(Block::Line {
                indent,
                text: strip_inline(text),
                bullet,
            });
        }
    }
    blocks
}

fn heading_level(line: &str) -> Option<u8> {
    let hashes = line.chars().take_while(|&c| c == '#').count();
    ((1..=6).contains(&hashes) && line[hashes..].starts_with(' ')).then_some(hashes as u8)
}

fn image_ref(line: &str) -> Option<(String, String)> {
    let rest = line.strip_prefix("![")?;
    let close = rest.find("](")?;
    let alt = &rest[..close];
    let after = &rest[close + 2..];
    let end = after.rfind(')')?;
    after[end + 1..]
        .trim()
        .is_empty()
        .then(|| (alt.to_string(), after[..end].trim().to_string()))
}

fn strip_inline(text: &str) -> String {
    text.replace("**", "").replace("__", "")
}

/// Greedy word wrap to `width` characters; overlong words are split.
pub fn wrap(text: &str, width: usize) -> Vec<String> {
    let width = width.max(1);
    let mut lines = Vec::new();
    let mut current = String::new();
    for word in text.split(' ').filter(|w| !w.is_empty()) {
        let mut word: Vec<char> = word.chars().collect();
        while word.len() > width {
            if !current.is_empty() {
                lines.push(std::mem::take(&mut current));
            }
            lines.push(word[..width].iter().collect());
            word.drain(..width);
        }
        if word.is_empty() {
            continue;
        }
        let wlen = word.len();
        let clen = current.chars().count();
        if clen > 0 && clen + 1 + wlen > width {
            lines.push(std::mem::take(&mut current));
        }
        if !current.is_empty() {
            current.push(' ');
        }
        current.extend(word);
    }
    if !current.is_empty() || lines.is_empty() {
        lines.push(current);
    }
    lines
}

struct Layout<'a> {
    builder: PdfBuilder,
    page: PdfPage,
    y: f32,
    base_dir: Option<&'a Path>,
    used: bool,
}

impl<'a> Layout<'a> {
    fn new(base_dir: Option<&'a Path>) -> Self {
        Self {
            builder: PdfBuilder::new(),
            page: PdfPage::new(LETTER),
            y: LETTER.1 - MARGIN,
            base_dir,
            used: false,
        }
    }

    fn new_page(&mut self) {
        let done = std::mem::replace(&mut self.page, PdfPage::new(LETTER));
        self.builder.push(done);
        self.y = LETTER.1 - MARGIN;
        self.used = false;
    }

    fn ensure(&mut self, height: f32) {
        if self.used && self.y - height < MARGIN {
            self.new_page();
        }
    }

    fn text_line(&mut self, x: f32, size: f32, leading: f32, face: Face, text: &str) {
        self.ensure(leading);
        self.y -= leading;
        self.page.text(x, self.y + (leading - size) * 0.5, size, face, text);
        self.used = true;
    }

    fn paragraph(&mut self, indent_chars: usize, size: f32, leading: f32, face: Face, text: &str, hang: &str) {
        let usable = LETTER.0 - 2.0 * MARGIN;
        let per_line = (usable / (CHAR_WIDTH * size)) as usize;
        let width = per_line.saturating_sub(indent_chars + hang.len()).max(8);
        let x0 = MARGIN + indent_chars as f32 * CHAR_WIDTH * size;
        for (i, line) in wrap(text, width).iter().enumerate() {
            let prefix = if i == 0 {
                hang.to_string()
            } else {
                " ".repeat(hang.len())
            };
            self.text_line(x0, size, leading, face, &format!("{prefix}{line}"));
        }
    }

    fn image(&mut self, alt: &str, path: &str) {
        let resolved = match self.base_dir {
            Some(dir) => dir.join(path),
            None => Path::new(path).to_path_buf(),
        };
        let img = match image::open(&resolved) {
            Ok(img) => flatten(img),
            Err(_) => {
                self.paragraph(
                    0,
                    10.0,
                    13.0,
                    Face::Regular,
                    &format!("[image unavailable: {path}]"),
                    "",
                );
                return;
            }
        };
        let max_w = LETTER.0 - 2.0 * MARGIN;
        let max_h = (LETTER.1 - 2.0 * MARGIN) * 0.6;
        let (iw, ih) = (img.width() as f32, img.height() as f32);
        let scale = (max_w / iw).min(max_h / ih).min(1.0);
        let (w, h) = (iw * scale, ih * scale);
        self.ensure(h + 16.0);
        self.y -= h;
        self.page.image(img, MARGIN, self.y, w, h);
        self.used = true;
        if !alt.is_empty() {
            self.paragraph(0, 9.0, 12.0, Face::Regular, alt, "");
        }
        self.y -= 4.0;
    }

    fn finish(mut self) -> PdfBuilder {
        let page = std::mem::replace(&mut self.page, PdfPage::new(LETTER));
        if self.used || self.builder.page_count() == 0 {
            self.builder.push(page);
        }
        self.builder
    }
}

fn flatten(img: image::DynamicImage) -> RgbImage {
    let rgba = img.to_rgba8();
    let mut out = RgbImage::new(rgba.width(), rgba.height());
    for (x, y, p) in rgba.enumerate_pixels() {
        let a = p[3] as u32;
        let blend = |c: u8| ((c as u32 * a + 255 * (255 - a)) / 255) as u8;
        out.put_pixel(x, y, image::Rgb([blend(p[0]), blend(p[1]), blend(p[2])]));
    }
    out
}

/// Lays out Markdown onto Letter pages. Image paths resolve against
/// `base_dir`.
pub fn markdown_to_pdf(markdown: &str, base_dir: Option<&Path>) -> PdfBuilder {
    let mut layout = Layout::new(base_dir);
    for block in parse_markdown(markdown) {
        match block {
            Block::Heading(level, text) => {
                let (size, leading, gap) = match level {
                    1 => (16.0, 22.0, 6.0),
                    2 => (13.0, 18.0, 8.0),
                    _ => (11.0, 15.0, 4.0),
                };
                if layout.used {
                    layout.y -= gap;
                }
                layout.ensure(leading * 2.0);
                layout.paragraph(0, size, leading, Face::Bold, &text, "");
            }
            Block::Line { indent, text, bullet } => {
                let hang = if bullet { "- " } else { "" };
                layout.paragraph(indent * 2, 10.0, 13.0, Face::Regular, &text, hang);
            }
            Block::Verbatim(text) => {
                let expanded = text.replace('\t', "    ");
                if expanded.is_empty() {
                    layout.text_line(MARGIN, 9.0, 11.0, Face::Regular, "");
                } else {
                    for chunk in wrap_hard(&expanded, 93) {
                        layout.text_line(MARGIN, 9.0, 11.0, Face::Regular, &chunk);
                    }
                }
            }
            Block::Image { alt, path } => layout.image(&alt, &path),
            Block::Blank => {
                if layout.used {
                    layout.y -= 6.0;
                }
            }
            Block::PageBreak => layout.new_page(),
        }
    }
    layout.finish()
}

fn wrap_hard(text: &str, width: usize) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    chars.chunks(width).map(|c| c.iter().collect()).collect()
}
