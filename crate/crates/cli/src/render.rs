//! Image output: raw PGM class ids, palette PNG for classes, min–max gray for
//! attributes and direct RGB for three coherence channels.
//!
//! Grids are row-major `height × width`. Every writer is a pure function of
//! its input, so the bytes are reproducible.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Class colours by id: chaotic texture, fault, salt dome, then extras.
pub const PALETTE: [[u8; 3]; 8] = [
    [0, 0, 255],
    [0, 200, 0],
    [255, 0, 0],
    [255, 220, 0],
    [0, 220, 220],
    [220, 0, 220],
    [255, 140, 0],
    [128, 128, 128],
];

pub fn palette_color(id: u8) -> [u8; 3] {
    PALETTE[id as usize % PALETTE.len()]
}

/// Binary PGM (P5), one byte per pixel.
pub fn pgm_bytes(height: usize, width: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), height * width);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn png_bytes(height: usize, width: usize, pixels: &[u8], rgb: bool) -> Result<Vec<u8>> {
    let channels = if rgb { 3 } else { 1 };
    assert_eq!(pixels.len(), height * width * channels);
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, u32::try_from(width)?, u32::try_from(height)?);
        enc.set_color(if rgb { png::ColorType::Rgb } else { png::ColorType::Grayscale });
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header()?;
        writer.write_image_data(pixels)?;
        writer.finish()?;
    }
    Ok(out)
}

/// Linear map of `[min, max]` onto `0..=255`; a constant grid maps to 0.
pub fn gray_levels(values: &[f64]) -> Result<Vec<u8>> {
    if let Some(p) = values.iter().position(|v| !v.is_finite()) {
        bail!("non-finite value at pixel {p}");
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return Ok(vec![0; values.len()]);
    }
    Ok(values.iter().map(|&v| ((v - lo) / (hi - lo) * 255.0).round() as u8).collect())
}

/// Coherence channels E1, E2, E3 as R, G, B; values are clamped to [0, 1].
pub fn rgb_levels(channels: [&[f64]; 3]) -> Result<Vec<u8>> {
    let n = channels[0].len();
    if channels.iter().any(|c| c.len() != n) {
        bail!("colour channels differ in length");
    }
    let mut out = Vec::with_capacity(3 * n);
    for p in 0..n {
        for c in channels {
            if !c[p].is_finite() {
                bail!("non-finite value at pixel {p}");
            }
            out.push((c[p].clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    Ok(out)
}

pub fn palette_pixels(ids: &[u8]) -> Vec<u8> {
    ids.iter().flat_map(|&id| palette_color(id)).collect()
}

/// Class ids stored as amplitudes; each must be a whole number in 0..=255.
pub fn class_ids(values: &[f64]) -> Result<Vec<u8>> {
    values
        .iter()
        .enumerate()
        .map(|(p, &v)| {
            if v.fract() != 0.0 || !(0.0..=255.0).contains(&v) {
                bail!("value {v} at pixel {p} is not a class id");
            }
            Ok(v as u8)
        })
        .collect()
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    f.write_all(bytes)?;
    f.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("pgm") => Ok(ImageFormat::Pgm),
            Some("png") => Ok(ImageFormat::Png),
            _ => bail!("{}: image output must end in .pgm or .png", path.display()),
        }
    }
}

/// Class ids: raw bytes for PGM, palette colours for PNG.
pub fn render_labels(path: &Path, height: usize, width: usize, ids: &[u8]) -> Result<()> {
    let bytes = match ImageFormat::from_path(path)? {
        ImageFormat::Pgm => pgm_bytes(height, width, ids),
        ImageFormat::Png => png_bytes(height, width, &palette_pixels(ids), true)?,
    };
    write_bytes(path, &bytes)
}

pub fn render_gray(path: &Path, height: usize, width: usize, values: &[f64]) -> Result<()> {
    let levels = gray_levels(values)?;
    let bytes = match ImageFormat::from_path(path)? {
        ImageFormat::Pgm => pgm_bytes(height, width, &levels),
        ImageFormat::Png => png_bytes(height, width, &levels, false)?,
    };
    write_bytes(path, &bytes)
}

pub fn render_rgb(path: &Path, height: usize, width: usize, channels: [&[f64]; 3]) -> Result<()> {
    if ImageFormat::from_path(path)? != ImageFormat::Png {
        bail!("{}: colour output needs a .png file", path.display());
    }
    write_bytes(path, &png_bytes(height, width, &rgb_levels(channels)?, true)?)
}

/// Gray image with the `overlay` pixels painted in `color`.
pub fn render_gray_overlay(path: &Path, height: usize, width: usize, values: &[f64], overlay: &[bool], color: [u8; 3]) -> Result<()> {
    if ImageFormat::from_path(path)? != ImageFormat::Png {
        bail!("{}: overlays need a .png file", path.display());
    }
    let levels = gray_levels(values)?;
    let pixels: Vec<u8> = levels
        .iter()
        .zip(overlay)
        .flat_map(|(&g, &on)| if on { color } else { [g, g, g] })
        .collect();
    write_bytes(path, &png_bytes(height, width, &pixels, true)?)
}

/// Section grids (rows × cols, cols being depth) drawn with depth downward.
pub fn transpose<T: Copy>(rows: usize, cols: usize, grid: &[T]) -> Vec<T> {
    (0..cols).flat_map(|c| (0..rows).map(move |r| grid[r * cols + c])).collect()
}
