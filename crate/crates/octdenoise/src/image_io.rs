//! Image files.
//!
//! Layout (little-endian):
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0  | 4 | magic: `OCTF` (float raster) or `OCTG` (16-bit gray) |
//! | 4  | 4 | version, u32 |
//! | 8  | 4 | rows, u32 |
//! | 12 | 4 | cols, u32 |
//! | 16 | 8 | min dB, f64 |
//! | 24 | 8 | max dB, f64 |
//! | 32 | 1 | provenance tag, u8 |
//! | 33 | .. | row-major payload: f64 per pixel (`OCTF`) or u16 per pixel (`OCTG`) |
//!
//! Gray levels map linearly onto `[min, max]`: `q = round((v - min) / (max - min) * 65535)`.
//! A constant image is stored with `min == max` and every level 0.

use std::path::Path;

use octdenoise_core::{Grid, LogImage, Provenance};

use crate::bytes::{to_u32, Reader, Writer};
use crate::error::{at, IoError, Result};

pub const FLOAT_MAGIC: [u8; 4] = *b"OCTF";
pub const GRAY_MAGIC: [u8; 4] = *b"OCTG";
pub const IMAGE_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 33;

const GRAY_LEVELS: f64 = 65535.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    FloatRaster,
    Gray16,
}

impl ImageFormat {
    pub fn magic(self) -> [u8; 4] {
        match self {
            ImageFormat::FloatRaster => FLOAT_MAGIC,
            ImageFormat::Gray16 => GRAY_MAGIC,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ImageFormat::FloatRaster => "float_raster",
            ImageFormat::Gray16 => "gray16",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "float_raster" => Some(ImageFormat::FloatRaster),
            "gray16" => Some(ImageFormat::Gray16),
            _ => None,
        }
    }

    /// `.g16` selects gray16; anything else is a float raster.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("g16") => ImageFormat::Gray16,
            _ => ImageFormat::FloatRaster,
        }
    }
}

pub fn encode_image(img: &LogImage, format: ImageFormat) -> Result<Vec<u8>> {
    let (rows, cols) = img.shape();
    let (lo, hi) = img.values().min_max();
    let bytes_per = match format {
        ImageFormat::FloatRaster => 8,
        ImageFormat::Gray16 => 2,
    };
    let mut out = Vec::with_capacity(HEADER_LEN + rows * cols * bytes_per);
    out.extend_from_slice(&format.magic());
    out.put_u32(IMAGE_VERSION);
    out.put_u32(to_u32(rows, "rows")?);
    out.put_u32(to_u32(cols, "cols")?);
    out.put_f64(lo);
    out.put_f64(hi);
    out.put_u8(img.provenance().tag());
    let values = img.values().as_slice();
    match format {
        ImageFormat::FloatRaster => values.iter().for_each(|&v| out.put_f64(v)),
        ImageFormat::Gray16 => {
            let span = hi - lo;
            for &v in values {
                let q = if span > 0.0 { ((v - lo) / span * GRAY_LEVELS).round() } else { 0.0 };
                out.put_u16(q.clamp(0.0, GRAY_LEVELS) as u16);
            }
        }
    }
    Ok(out)
}

pub fn decode_image(bytes: &[u8]) -> Result<(LogImage, ImageFormat)> {
    let mut r = Reader::new(bytes, "image header");
    let magic: [u8; 4] = r.array()?;
    let format = match magic {
        FLOAT_MAGIC => ImageFormat::FloatRaster,
        GRAY_MAGIC => ImageFormat::Gray16,
        found => return Err(IoError::BadMagic { found, expected: FLOAT_MAGIC }),
    };
    let version = r.u32()?;
    if version != IMAGE_VERSION {
        return Err(IoError::UnsupportedVersion {
            found: version,
            supported: IMAGE_VERSION,
        });
    }
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let lo = r.f64()?;
    let hi = r.f64()?;
    let tag = r.u8()?;
    let provenance =
        Provenance::from_tag(tag).ok_or_else(|| IoError::Malformed(format!("unknown provenance tag {tag}")))?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(IoError::Malformed(format!("invalid dB range [{lo}, {hi}]")));
    }
    let bytes_per = match format {
        ImageFormat::FloatRaster => 8,
        ImageFormat::Gray16 => 2,
    };
    let payload = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(bytes_per))
        .ok_or(IoError::DimensionOverflow {
            rows: rows as u64,
            cols: cols as u64,
        })?;
    let mut body = Reader::new(r.take(payload).map_err(|e| rename(e, "image payload"))?, "image payload");
    let mut data = Vec::with_capacity(rows * cols);
    match format {
        ImageFormat::FloatRaster => {
            for _ in 0..rows * cols {
                data.push(body.f64()?);
            }
        }
        ImageFormat::Gray16 => {
            let span = hi - lo;
            for _ in 0..rows * cols {
                let q = body.u16()? as f64;
                data.push(match q {
                    0.0 => lo,
                    GRAY_LEVELS => hi,
                    _ => lo + q / GRAY_LEVELS * span,
                });
            }
        }
    }
    if r.remaining() > 0 {
        return Err(IoError::TrailingBytes(r.remaining()));
    }
    let img = LogImage::new(Grid::from_vec(rows, cols, data)?, provenance)?;
    Ok((img, format))
}

fn rename(e: IoError, what: &'static str) -> IoError {
    match e {
        IoError::Truncated { needed, missing, .. } => IoError::Truncated { what, needed, missing },
        other => other,
    }
}

pub fn save_image(path: &Path, img: &LogImage, format: ImageFormat) -> Result<()> {
    std::fs::write(path, encode_image(img, format)?).map_err(at(path))
}

pub fn load_image(path: &Path) -> Result<LogImage> {
    Ok(decode_image(&std::fs::read(path).map_err(at(path))?)?.0)
}
