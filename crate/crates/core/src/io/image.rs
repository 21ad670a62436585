//! Greyscale image output: PFM (raw floats) and binary PGM (8-bit).
//!
//! Images are `Array2` indexed `[row, column]`, row 0 at the top.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use crate::error::{NlosError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Pfm,
    Pgm,
}

impl ImageFormat {
    /// Picks the format from a `.pfm` / `.pgm` extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        path.extension()
            .and_then(|e| e.to_str())
            .ok_or_else(|| NlosError::invalid(format!("{} has no image extension (.pfm or .pgm)", path.display())))?
            .parse()
    }
}

impl FromStr for ImageFormat {
    type Err = NlosError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pfm" => Ok(ImageFormat::Pfm),
            "pgm" => Ok(ImageFormat::Pgm),
            other => Err(NlosError::invalid(format!("unknown image format {other:?}"))),
        }
    }
}

/// Greyscale PFM: header `Pf`, dimensions, scale `-1.0` (little-endian), then
/// rows bottom to top as required by the format.
pub fn encode_pfm(img: &Array2<f64>) -> Vec<u8> {
    let (h, w) = img.dim();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    for row in img.rows().into_iter().rev() {
        for v in row {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

/// Binary PGM with values clamped to `[0, 1]` and scaled to `0..=255`,
/// rounding to nearest.
pub fn encode_pgm(img: &Array2<f64>) -> Vec<u8> {
    let (h, w) = img.dim();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(img.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn write_image(img: &Array2<f64>, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    if img.iter().any(|v| !v.is_finite()) {
        return Err(NlosError::invalid("image contains non-finite values"));
    }
    let bytes = match format {
        ImageFormat::Pfm => encode_pfm(img),
        ImageFormat::Pgm => encode_pgm(img),
    };
    fs::write(path, bytes)?;
    Ok(())
}

/// Parses a greyscale little-endian PFM.
pub fn decode_pfm(bytes: &[u8]) -> Result<Array2<f64>> {
    let bad = |m: &str| NlosError::Header(format!("pfm: {m}"));
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-text header"))?);
    }
    pos += 1; // single whitespace before the raster
    if fields[0] != "Pf" {
        return Err(NlosError::BadMagic { expected: "Pf".into() });
    }
    let w: usize = fields[1].parse().map_err(|_| bad("width"))?;
    let h: usize = fields[2].parse().map_err(|_| bad("height"))?;
    let scale: f64 = fields[3].parse().map_err(|_| bad("scale"))?;
    if scale >= 0.0 {
        return Err(bad("only little-endian (negative scale) files are supported"));
    }
    let raster = bytes.get(pos..).unwrap_or_default();
    if raster.len() != w * h * 4 {
        return Err(NlosError::TruncatedPayload { expected: w * h * 4, found: raster.len() });
    }
    let mut img = Array2::zeros((h, w));
    for (k, c) in raster.chunks_exact(4).enumerate() {
        let (r, col) = (h - 1 - k / w, k % w);
        img[[r, col]] = f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64;
    }
    Ok(img)
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    decode_pfm(&fs::read(path)?)
}
