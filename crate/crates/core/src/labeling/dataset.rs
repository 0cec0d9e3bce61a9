//! Image-level training sets: one column per image, stored on disk as a
//! directory of single-section SVOL patches plus a manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{dim, invalid, Error, Result};
use crate::linalg::Matrix;
use crate::volume::{read_svol, write_svol, Section2D, SeismicVolume};

pub const MANIFEST: &str = "manifest.txt";

/// Where a patch was cut from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchSource {
    pub volume: String,
    pub row: usize,
    pub col: usize,
}

impl Default for PatchSource {
    fn default() -> Self {
        Self {
            volume: "-".into(),
            row: 0,
            col: 0,
        }
    }
}

/// Nonnegative data matrix with one vectorized image per column.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedDataset {
    /// Image shape; every column holds `rows * cols` pixels in row-major order.
    pub image_shape: (usize, usize),
    /// `N_p × N_s`.
    pub x: Matrix,
    pub labels: Vec<u8>,
    pub class_count: usize,
    /// Amount added to each image to bring its minimum to zero.
    pub offsets: Vec<f64>,
    pub sources: Vec<PatchSource>,
}

impl AugmentedDataset {
    /// Shifts each image to minimum zero and stacks them as columns.
    pub fn from_images(
        images: &[Section2D],
        labels: Vec<u8>,
        class_count: usize,
        sources: Vec<PatchSource>,
    ) -> Result<Self> {
        let first = images.first().ok_or_else(|| Error::Empty("no images".into()))?;
        let shape = first.shape();
        if images.iter().any(|im| im.shape() != shape) {
            return Err(dim("dataset images differ in shape"));
        }
        if labels.len() != images.len() || sources.len() != images.len() {
            return Err(dim(format!(
                "{} images, {} labels, {} sources",
                images.len(),
                labels.len(),
                sources.len()
            )));
        }
        let np = shape.0 * shape.1;
        let ns = images.len();
        let mut x = Matrix::zeros(np, ns);
        let mut offsets = Vec::with_capacity(ns);
        for (n, im) in images.iter().enumerate() {
            if let Some(pos) = im.values().iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(pos));
            }
            let min = im.values().iter().fold(f32::INFINITY, |a, &b| a.min(b)) as f64;
            offsets.push(-min);
            for (p, &v) in im.values().iter().enumerate() {
                x.set(p, n, v as f64 - min);
            }
        }
        let ds = Self {
            image_shape: shape,
            x,
            labels,
            class_count,
            offsets,
            sources,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.x.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.x.cols() == 0
    }

    pub fn pixel_count(&self) -> usize {
        self.x.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let (np, ns) = self.x.shape();
        if np != self.image_shape.0 * self.image_shape.1 {
            return Err(dim("image shape does not match the data matrix"));
        }
        if self.labels.len() != ns || self.offsets.len() != ns || self.sources.len() != ns {
            return Err(dim("per-image metadata does not match the column count"));
        }
        if self.x.data().iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(invalid("dataset entries must be finite and nonnegative"));
        }
        for class in 0..self.class_count {
            if !self.labels.iter().any(|&l| l as usize == class) {
                return Err(Error::Empty(format!("class {class} has no images")));
            }
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l as usize >= self.class_count) {
            return Err(invalid(format!("label {l} outside 0..{}", self.class_count)));
        }
        Ok(())
    }

    /// Column `n` as an image, with its offset removed.
    pub fn image(&self, n: usize) -> Section2D {
        let (rows, cols) = self.image_shape;
        let off = self.offsets[n];
        Section2D::from_fn(rows, cols, |r, c| (self.x.get(r * cols + c, n) - off) as f32)
    }
}

fn patch_name(n: usize) -> String {
    format!("patch_{n:05}.svol")
}

/// Writes one SVOL file per image and `manifest.txt` with
/// `id class source_volume row col` lines.
pub fn write_dataset(ds: &AugmentedDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let (rows, cols) = ds.image_shape;
    let mut manifest = String::new();
    let _ = writeln!(manifest, "# classes {}", ds.class_count);
    for n in 0..ds.len() {
        let image = ds.image(n);
        let vol = SeismicVolume::new(1, rows, cols, image.values().to_vec())?;
        write_svol(&vol, dir.join(patch_name(n)))?;
        let src = &ds.sources[n];
        let _ = writeln!(manifest, "{n} {} {} {} {}", ds.labels[n], src.volume, src.row, src.col);
    }
    fs::write(dir.join(MANIFEST), manifest)?;
    Ok(())
}

pub fn read_dataset(dir: impl AsRef<Path>) -> Result<AugmentedDataset> {
    let dir = dir.as_ref();
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let mut class_count = None;
    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut sources = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("# classes") {
            class_count = Some(rest.trim().parse::<usize>().map_err(|_| {
                Error::Format(format!("manifest line {}: bad class count", lineno + 1))
            })?);
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || Error::Format(format!("manifest line {}: expected `id class volume row col`", lineno + 1));
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 5 {
            return Err(bad());
        }
        let id: usize = parts[0].parse().map_err(|_| bad())?;
        let class: u8 = parts[1].parse().map_err(|_| bad())?;
        let vol = read_svol(dir.join(patch_name(id)))?;
        let (ni, rows, cols) = vol.dims();
        if ni != 1 {
            return Err(Error::Format(format!("patch {id} holds {ni} sections")));
        }
        images.push(Section2D::from_grid(rows, cols, vol.into_amplitudes())?);
        labels.push(class);
        sources.push(PatchSource {
            volume: parts[2].to_string(),
            row: parts[3].parse().map_err(|_| bad())?,
            col: parts[4].parse().map_err(|_| bad())?,
        });
    }
    let class_count = class_count.unwrap_or_else(|| labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0));
    AugmentedDataset::from_images(&images, labels, class_count, sources)
}
