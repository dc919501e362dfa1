//! Minimal raster drawing on RGB images with the built-in 8x8 bitmap font.

use font8x8::UnicodeFonts;
use image::{Rgb, RgbImage};

pub const WHITE: Rgb<u8> = Rgb([255, 255, 255]);
pub const BLACK: Rgb<u8> = Rgb([0, 0, 0]);
pub const GRID: Rgb<u8> = Rgb([160, 160, 160]);
pub const HEADER_FILL: Rgb<u8> = Rgb([232, 236, 242]);

/// 8x8 bitmap for `c`; bit `i` of row `r` is pixel `(i, r)`.
pub fn glyph(c: char) -> [u8; 8] {
    font8x8::BASIC_FONTS
        .get(c)
        .or_else(|| font8x8::LATIN_FONTS.get(c))
        .or_else(|| font8x8::GREEK_FONTS.get(c))
        .or_else(|| font8x8::BOX_FONTS.get(c))
        .or_else(|| font8x8::BLOCK_FONTS.get(c))
        .or_else(|| font8x8::MISC_FONTS.get(c))
        .unwrap_or_else(|| font8x8::BASIC_FONTS.get('?').unwrap_or([0; 8]))
}

pub fn fill_rect(img: &mut RgbImage, x0: i64, y0: i64, w: i64, h: i64, color: Rgb<u8>) {
    let (iw, ih) = (img.width() as i64, img.height() as i64);
    let xs = x0.max(0)..(x0 + w).min(iw);
    for y in y0.max(0)..(y0 + h).min(ih) {
        for x in xs.clone() {
            img.put_pixel(x as u32, y as u32, color);
        }
    }
}

/// Draws `text` left to right from `(x, y)` (top-left), each glyph scaled
/// by an integer factor. Returns the x position after the last glyph.
pub fn draw_text(img: &mut RgbImage, x: i64, y: i64, text: &str, scale: i64, color: Rgb<u8>) -> i64 {
    let mut cx = x;
    for c in text.chars() {
        let rows = glyph(c);
        for (r, bits) in rows.iter().enumerate() {
            for col in 0..8 {
                if bits & (1 << col) != 0 {
                    fill_rect(img, cx + col * scale, y + r as i64 * scale, scale, scale, color);
                }
            }
        }
        cx += 8 * scale;
    }
    cx
}

pub fn hline(img: &mut RgbImage, x0: i64, x1: i64, y: i64, color: Rgb<u8>) {
    fill_rect(img, x0, y, x1 - x0, 1, color);
}

pub fn vline(img: &mut RgbImage, x: i64, y0: i64, y1: i64, color: Rgb<u8>) {
    fill_rect(img, x, y0, 1, y1 - y0, color);
}
