//! Texture feature vectors: singular values of oriented band-pass subbands.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::FeatureVector;
use crate::attributes::{glcm_features, with_workers, GlcmParams};
use crate::error::{dim, invalid, Error, Result};
use crate::linalg::{singular_values, Matrix};
use crate::volume::Section2D;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Dyadic band-pass scales, finest first.
    pub scales: usize,
    pub orientations: usize,
    /// Leading singular values kept per subband.
    pub top_m: usize,
    /// Smallest accepted patch side.
    pub min_side: usize,
    /// Append GLCM statistics of the whole patch.
    pub glcm: bool,
    pub glcm_params: GlcmParams,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            scales: 3,
            orientations: 4,
            top_m: 8,
            min_side: 32,
            glcm: false,
            glcm_params: GlcmParams::default(),
        }
    }
}

/// Something that turns a square patch into a nonnegative feature vector.
pub trait TextureExtractor: Sync {
    fn id(&self) -> String;
    fn min_side(&self) -> usize;
    fn extract(&self, patch: &Section2D) -> Result<FeatureVector>;
}

/// Frequency-domain bank: `scales × orientations` band-pass filters plus a
/// low-pass residual. The windows are squared cosines in log-radius and in
/// angle, so the bank sums to one at every frequency.
#[derive(Clone, Debug)]
pub struct FilterBank {
    pub config: FeatureConfig,
}

impl FilterBank {
    pub fn new(config: FeatureConfig) -> Result<Self> {
        if config.scales == 0 || config.orientations == 0 || config.top_m == 0 {
            return Err(invalid("filter bank needs at least one scale, orientation and singular value"));
        }
        if config.min_side < 4 {
            return Err(invalid("minimum patch side must be at least 4"));
        }
        Ok(Self { config })
    }

    pub fn subband_count(&self) -> usize {
        self.config.scales * self.config.orientations + 1
    }

    pub fn feature_len(&self) -> usize {
        let glcm = if self.config.glcm {
            4 * self.config.glcm_params.offsets.len()
        } else {
            0
        };
        self.subband_count() * self.config.top_m + glcm
    }

    /// Filter responses on the `side × side` DFT grid, low-pass last.
    pub fn filters(&self, side: usize) -> Vec<Vec<f64>> {
        let (ns, no) = (self.config.scales, self.config.orientations);
        let freq = |k: usize| {
            if k <= side / 2 {
                k as f64 / side as f64
            } else {
                k as f64 / side as f64 - 1.0
            }
        };
        let mut bank = vec![vec![0.0; side * side]; ns * no + 1];
        for r in 0..side {
            for c in 0..side {
                let (fr, fc) = (freq(r), freq(c));
                let radius = fr.hypot(fc);
                let at = r * side + c;
                if radius == 0.0 {
                    bank[ns * no][at] = 1.0;
                    continue;
                }
                let u = (0.5 / radius).log2().max(0.0);
                let theta = fr.atan2(fc).rem_euclid(PI);
                for s in 0..ns {
                    let du = u - s as f64;
                    if du.abs() >= 1.0 {
                        continue;
                    }
                    let radial = (0.5 * PI * du).cos().powi(2);
                    for o in 0..no {
                        let centre = o as f64 * PI / no as f64;
                        let mut d = (theta - centre).rem_euclid(PI);
                        if d > 0.5 * PI {
                            d -= PI;
                        }
                        if d.abs() < PI / no as f64 {
                            let angular = (0.5 * no as f64 * d).cos().powi(2);
                            bank[s * no + o][at] = radial * angular;
                        }
                    }
                }
                let top = (ns - 1) as f64;
                bank[ns * no][at] = if u >= top + 1.0 {
                    1.0
                } else if u > top {
                    (0.5 * PI * (u - top)).sin().powi(2)
                } else {
                    0.0
                };
            }
        }
        bank
    }

    /// Real subband grids of a square patch, low-pass last.
    pub fn decompose(&self, patch: &Section2D) -> Result<Vec<Vec<f64>>> {
        let side = self.check(patch)?;
        let mut planner = FftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(side);
        let inverse = planner.plan_fft_inverse(side);
        let mut spectrum: Vec<Complex<f64>> = patch.values().iter().map(|&v| Complex::new(v as f64, 0.0)).collect();
        fft2(&mut spectrum, side, forward.as_ref());
        let scale = 1.0 / (side * side) as f64;
        Ok(self
            .filters(side)
            .iter()
            .map(|h| {
                let mut band: Vec<Complex<f64>> = spectrum.iter().zip(h).map(|(s, &w)| s * w).collect();
                fft2(&mut band, side, inverse.as_ref());
                band.iter().map(|z| z.re * scale).collect()
            })
            .collect())
    }

    fn check(&self, patch: &Section2D) -> Result<usize> {
        let (rows, cols) = patch.shape();
        if rows != cols {
            return Err(dim(format!("texture patch must be square, got {rows}x{cols}")));
        }
        if rows < self.config.min_side {
            return Err(invalid(format!(
                "texture patch side {rows} below the minimum {}",
                self.config.min_side
            )));
        }
        if let Some(pos) = patch.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(rows)
    }
}

/// In-place 2D transform of a row-major square grid.
fn fft2(data: &mut [Complex<f64>], side: usize, fft: &dyn rustfft::Fft<f64>) {
    for row in data.chunks_mut(side) {
        fft.process(row);
    }
    let mut column = vec![Complex::new(0.0, 0.0); side];
    for c in 0..side {
        for r in 0..side {
            column[r] = data[r * side + c];
        }
        fft.process(&mut column);
        for r in 0..side {
            data[r * side + c] = column[r];
        }
    }
}

impl TextureExtractor for FilterBank {
    fn id(&self) -> String {
        let c = &self.config;
        format!(
            "bank-s{}-o{}-m{}{}",
            c.scales,
            c.orientations,
            c.top_m,
            if c.glcm { "-glcm" } else { "" }
        )
    }

    fn min_side(&self) -> usize {
        self.config.min_side
    }

    fn extract(&self, patch: &Section2D) -> Result<FeatureVector> {
        let side = self.check(patch)?;
        let m = self.config.top_m;
        let mut values = Vec::with_capacity(self.feature_len());
        for band in self.decompose(patch)? {
            let sv = singular_values(&Matrix::from_vec(side, side, band)?);
            values.extend((0..m).map(|i| sv.get(i).copied().unwrap_or(0.0)));
        }
        if self.config.glcm {
            let g = &self.config.glcm_params;
            values.extend(glcm_features(&patch.to_f64(), side, side, g.levels, &g.offsets)?);
        }
        Ok(FeatureVector {
            values,
            extractor_id: self.id(),
        })
    }
}

/// Feature vector of one patch under the default filter bank.
pub fn texture_feature_vector(patch: &Section2D, config: &FeatureConfig) -> Result<FeatureVector> {
    FilterBank::new(config.clone())?.extract(patch)
}

/// Feature vectors of many patches, in input order.
pub fn extract_features(
    extractor: &dyn TextureExtractor,
    patches: &[Section2D],
    workers: usize,
) -> Result<Vec<FeatureVector>> {
    with_workers(workers, || patches.par_iter().map(|p| extractor.extract(p)).collect())
}
