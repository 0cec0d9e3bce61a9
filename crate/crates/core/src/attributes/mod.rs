//! Per-voxel structural attributes.

mod dft;
mod glcm;
mod got;
mod gtc;
mod sobel;

pub use dft::{dft3_magnitude, perceptual_dissimilarity, Dft3};
pub use glcm::{glcm_features, glcm_matrix, glcm_section, GlcmParams, GLCM_FEATURES};
pub use got::{got3d, got_section, got_voxel, GotAxis, GotParams};
pub use gtc::{gtc, gtc_section, gtc_voxel, GtcParams};
pub use sobel::{sobel_directional, sobel_kernel, sobel_magnitude, SobelAngle};

use crate::error::{dim, Result};
use crate::volume::{SectionAxis, SeismicVolume};

/// A scalar or multi-channel attribute grid aligned with a volume.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributeVolume {
    dims: (usize, usize, usize),
    channels: Vec<Vec<f64>>,
}

impl AttributeVolume {
    pub fn new(dims: (usize, usize, usize), channels: Vec<Vec<f64>>) -> Result<Self> {
        let n = dims.0 * dims.1 * dims.2;
        if channels.is_empty() || channels.iter().any(|c| c.len() != n) {
            return Err(dim(format!("attribute channels do not match {dims:?}")));
        }
        Ok(Self { dims, channels })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.channels[c]
    }

    #[inline]
    pub fn get(&self, c: usize, il: usize, xl: usize, s: usize) -> f64 {
        self.channels[c][(il * self.dims.1 + xl) * self.dims.2 + s]
    }

    /// `1 - min_c value`, the scalar discontinuity of a coherence volume.
    pub fn discontinuity(&self) -> AttributeVolume {
        let n = self.channels[0].len();
        let values = (0..n)
            .map(|p| 1.0 - self.channels.iter().map(|c| c[p]).fold(f64::INFINITY, f64::min))
            .collect();
        AttributeVolume {
            dims: self.dims,
            channels: vec![values],
        }
    }

    /// One channel as a single-precision volume, for SVOL export.
    pub fn channel_volume(&self, c: usize) -> Result<SeismicVolume> {
        let (ni, nx, ns) = self.dims;
        SeismicVolume::new(ni, nx, ns, self.channels[c].iter().map(|&v| v as f32).collect())
    }

    pub fn from_volumes(volumes: &[SeismicVolume]) -> Result<Self> {
        let dims = volumes
            .first()
            .ok_or_else(|| dim("no channel volumes"))?
            .dims();
        if volumes.iter().any(|v| v.dims() != dims) {
            return Err(dim("channel volumes differ in shape"));
        }
        Self::new(
            dims,
            volumes
                .iter()
                .map(|v| v.amplitudes().iter().map(|&a| a as f64).collect())
                .collect(),
        )
    }

    /// Channel `c` on one section, row-major in `extract_section` layout.
    pub fn section(&self, c: usize, axis: SectionAxis, index: usize) -> Result<Vec<f64>> {
        let (ni, nx, ns) = self.dims;
        let (rows, cols, len) = match axis {
            SectionAxis::Inline => (nx, ns, ni),
            SectionAxis::Crossline => (ni, ns, nx),
            SectionAxis::TimeSlice => (ni, nx, ns),
        };
        if index >= len {
            return Err(crate::Error::OutOfRange(format!("{axis} index {index}")));
        }
        let mut out = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for col in 0..cols {
                let (i, j, k) = SeismicVolume::section_to_volume(axis, index, r, col);
                out.push(self.get(c, i, j, k));
            }
        }
        Ok(out)
    }
}

/// Runs `f` on a pool of `workers` threads (0 = rayon default).
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
