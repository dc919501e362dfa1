//! Decoding of image XObjects into RGB rasters.

use image::RgbImage;
use lopdf::{Document, Object, Stream};

/// Decodes an image XObject. Returns an error message for unsupported
/// encodings so callers can record and skip the image.
pub fn decode(doc: &Document, stream: &Stream) -> Result<RgbImage, String> {
    let dict = &stream.dict;
    let filters: Vec<Vec<u8>> = stream
        .filters()
        .map(|f| f.into_iter().map(|s| s.to_vec()).collect())
        .unwrap_or_default();
    let width = int(doc, dict.get(b"Width").ok()).ok_or("missing Width")? as u32;
    let height = int(doc, dict.get(b"Height").ok()).ok_or("missing Height")? as u32;
    if width == 0 || height == 0 || (width as u64) * (height as u64) > 100_000_000 {
        return Err(format!("implausible image size {width}x{height}"));
    }

    if let Some(last) = filters.last() {
        match last.as_slice() {
            b"DCTDecode" => {
                let data = if filters.len() > 1 {
                    prefilter(stream, filters.len() - 1)?
                } else {
                    stream.content.clone()
                };
                return image::load_from_memory_with_format(&data, image::ImageFormat::Jpeg)
                    .map(|img| img.to_rgb8())
                    .map_err(|e| format!("jpeg: {e}"));
            }
            b"JPXDecode" | b"JBIG2Decode" | b"CCITTFaxDecode" => {
                return Err(format!("unsupported filter {}", String::from_utf8_lossy(last)));
            }
            _ => {}
        }
    }
    let data = if filters.is_empty() {
        stream.content.clone()
    } else {
        stream.decompressed_content().map_err(|e| e.to_string())?
    };

    let is_mask = dict.get(b"ImageMask").and_then(Object::as_bool).unwrap_or(false);
    let bpc = if is_mask {
        1
    } else {
        int(doc, dict.get(b"BitsPerComponent").ok()).unwrap_or(8) as u32
    };
    let space = if is_mask {
        ColorSpace::Gray
    } else {
        color_space(doc, dict.get(b"ColorSpace").ok())?
    };
    let comps = space.components();
    let samples = unpack(&data, width, height, comps, bpc)?;

    let mut img = RgbImage::new(width, height);
    for (i, px) in img.pixels_mut().enumerate() {
        let s = &samples[i * comps as usize..(i + 1) * comps as usize];
        let rgb = match &space {
            ColorSpace::Gray if is_mask => {
                if s[0] == 0 {
                    [0, 0, 0]
                } else {
                    [255, 255, 255]
                }
            }
            ColorSpace::Gray => [s[0], s[0], s[0]],
            ColorSpace::Rgb => [s[0], s[1], s[2]],
            ColorSpace::Cmyk => cmyk(s[0], s[1], s[2], s[3]),
            ColorSpace::Indexed { base, hival, table } => {
                let idx = (s[0] as usize).min(*hival);
                let n = base.components() as usize;
                let entry = table.get(idx * n..idx * n + n).unwrap_or(&[0, 0, 0, 0][..n.min(4)]);
                match base.as_ref() {
                    ColorSpace::Gray => [entry[0]; 3],
                    ColorSpace::Cmyk => cmyk(entry[0], entry[1], entry[2], entry[3]),
                    _ => [entry[0], entry[1], entry[2]],
                }
            }
        };
        *px = image::Rgb(rgb);
    }
    Ok(img)
}

fn prefilter(stream: &Stream, keep: usize) -> Result<Vec<u8>, String> {
    let mut partial = stream.clone();
    let filters: Vec<Object> = stream
        .filters()
        .map_err(|e| e.to_string())?
        .into_iter()
        .take(keep)
        .map(|f| Object::Name(f.to_vec()))
        .collect();
    partial.dict.set("Filter", Object::Array(filters));
    partial.decompressed_content().map_err(|e| e.to_string())
}

#[derive(Debug, Clone)]
enum ColorSpace {
    Gray,
    Rgb,
    Cmyk,
    Indexed {
        base: Box<ColorSpace>,
        hival: usize,
        table: Vec<u8>,
    },
}

impl ColorSpace {
    fn components(&self) -> u32 {
        match self {
            ColorSpace::Gray | ColorSpace::Indexed { .. } => 1,
            ColorSpace::Rgb => 3,
            ColorSpace::Cmyk => 4,
        }
    }
}

fn color_space(doc: &Document, obj: Option<&Object>) -> Result<ColorSpace, String> {
    let Some(obj) = obj else { return Ok(ColorSpace::Rgb) };
    let (_, obj) = doc.dereference(obj).map_err(|e| e.to_string())?;
    match obj {
        Object::Name(name) => by_name(name),
        Object::Array(items) => {
            let head = items.first().and_then(|o| o.as_name().ok()).unwrap_or(b"");
            match head {
                b"ICCBased" => {
                    let n = items
                        .get(1)
                        .and_then(|r| doc.dereference(r).ok())
                        .and_then(|(_, o)| o.as_stream().ok())
                        .and_then(|s| s.dict.get(b"N").and_then(Object::as_i64).ok())
                        .unwrap_or(3);
                    Ok(match n {
                        1 => ColorSpace::Gray,
                        4 => ColorSpace::Cmyk,
                        _ => ColorSpace::Rgb,
                    })
                }
                b"Indexed" | b"I" => {
                    let base = color_space(doc, items.get(1))?;
                    let hival = items.get(2).and_then(|o| int(doc, Some(o))).unwrap_or(255) as usize;
                    let table = match items.get(3).map(|o| doc.dereference(o)) {
                        Some(Ok((_, Object::String(bytes, _)))) => bytes.clone(),
                        Some(Ok((_, Object::Stream(s)))) => {
                            s.decompressed_content().unwrap_or_else(|_| s.content.clone())
                        }
                        _ => return Err("indexed color space without lookup table".into()),
                    };
                    Ok(ColorSpace::Indexed {
                        base: Box::new(base),
                        hival,
                        table,
                    })
                }
                b"CalRGB" | b"Lab" => Ok(ColorSpace::Rgb),
                b"CalGray" => Ok(ColorSpace::Gray),
                b"Separation" | b"DeviceN" => Ok(ColorSpace::Gray),
                other => by_name(other),
            }
        }
        _ => Err("unrecognized color space".into()),
    }
}

fn by_name(name: &[u8]) -> Result<ColorSpace, String> {
    match name {
        b"DeviceGray" | b"G" | b"CalGray" => Ok(ColorSpace::Gray),
        b"DeviceRGB" | b"RGB" | b"CalRGB" => Ok(ColorSpace::Rgb),
        b"DeviceCMYK" | b"CMYK" => Ok(ColorSpace::Cmyk),
        other => Err(format!("unsupported color space {}", String::from_utf8_lossy(other))),
    }
}

/// Expands packed samples to one byte per component, scaled to 0..=255
/// (indexed images keep raw indices).
fn unpack(data: &[u8], w: u32, h: u32, comps: u32, bpc: u32) -> Result<Vec<u8>, String> {
    let per_row = (w * comps) as usize;
    let row_bytes = (per_row * bpc as usize).div_ceil(8);
    let needed = row_bytes * h as usize;
    if data.len() < needed {
        return Err(format!("image data too short: {} < {needed}", data.len()));
    }
    if bpc == 8 {
        return Ok(data[..needed].to_vec());
    }
    if !matches!(bpc, 1 | 2 | 4 | 16) {
        return Err(format!("unsupported bits per component {bpc}"));
    }
    let mut out = Vec::with_capacity(per_row * h as usize);
    for row in data[..needed].chunks(row_bytes) {
        for i in 0..per_row {
            let v = match bpc {
                16 => row[i * 2],
                _ => {
                    let bit = i * bpc as usize;
                    let byte = row[bit / 8];
                    let shift = 8 - bpc as usize - (bit % 8);
                    let max = (1u16 << bpc) - 1;
                    let raw = (byte >> shift) as u16 & max;
                    (raw * 255 / max) as u8
                }
            };
            out.push(v);
        }
    }
    Ok(out)
}

fn cmyk(c: u8, m: u8, y: u8, k: u8) -> [u8; 3] {
    let f = |v: u8| ((255 - v as u32) * (255 - k as u32) / 255) as u8;
    [f(c), f(m), f(y)]
}

fn int(doc: &Document, obj: Option<&Object>) -> Option<i64> {
    let (_, o) = doc.dereference(obj?).ok()?;
    o.as_i64().ok().or_else(|| o.as_float().ok().map(|f| f as i64))
}
