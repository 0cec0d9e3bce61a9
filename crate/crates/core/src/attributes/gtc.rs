//! Tensor coherence: per-mode leading-eigenvalue ratios of a local cube.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{with_workers, AttributeVolume};
use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::multilinear::{ratio_of_centered, unfold, Tensor3};
use crate::volume::{SectionAxis, SeismicVolume};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GtcParams {
    /// Analysis cube (inline, crossline, sample); each edge odd.
    pub cube: [usize; 3],
}

impl Default for GtcParams {
    fn default() -> Self {
        Self { cube: [3, 3, 9] }
    }
}

impl GtcParams {
    pub fn validate(&self, volume: &SeismicVolume) -> Result<()> {
        let (ni, nx, ns) = volume.dims();
        for (edge, len) in self.cube.iter().zip([ni, nx, ns]) {
            if edge % 2 == 0 {
                return Err(invalid(format!("cube edges must be odd, got {:?}", self.cube)));
            }
            if *edge > len {
                return Err(invalid(format!(
                    "cube {:?} is larger than the {:?} volume",
                    self.cube,
                    volume.dims()
                )));
            }
        }
        Ok(())
    }
}

/// Replicate-padded neighborhood centered on a voxel.
pub(crate) fn cube_at(volume: &SeismicVolume, cube: [usize; 3], il: usize, xl: usize, s: usize) -> Tensor3 {
    let h = [cube[0] / 2, cube[1] / 2, cube[2] / 2];
    Tensor3::from_fn((cube[0], cube[1], cube[2]), |a, b, c| {
        volume.get_clamped(
            il as isize + a as isize - h[0] as isize,
            xl as isize + b as isize - h[1] as isize,
            s as isize + c as isize - h[2] as isize,
        ) as f64
    })
}

fn mode_ratio(t: &Tensor3, mode: usize) -> f64 {
    let mut m: Matrix = unfold(t, mode).expect("valid mode");
    let cols = m.cols();
    for r in 0..m.rows() {
        let row = &mut m.data_mut()[r * cols..(r + 1) * cols];
        let mean = row.iter().sum::<f64>() / cols as f64;
        row.iter_mut().for_each(|v| *v -= mean);
    }
    ratio_of_centered(&m)
}

/// Coherence of each mode at one voxel.
pub fn gtc_voxel(volume: &SeismicVolume, params: &GtcParams, il: usize, xl: usize, s: usize) -> [f64; 3] {
    let t = cube_at(volume, params.cube, il, xl, s);
    [mode_ratio(&t, 1), mode_ratio(&t, 2), mode_ratio(&t, 3)]
}

/// Three-channel coherence volume; channel `i` is the mode-`i+1` ratio.
pub fn gtc(volume: &SeismicVolume, params: &GtcParams, workers: usize) -> Result<AttributeVolume> {
    params.validate(volume)?;
    let (ni, nx, ns) = volume.dims();
    let planes: Vec<Vec<[f64; 3]>> = with_workers(workers, || {
        (0..ni)
            .into_par_iter()
            .map(|il| {
                let mut out = Vec::with_capacity(nx * ns);
                for xl in 0..nx {
                    for s in 0..ns {
                        out.push(gtc_voxel(volume, params, il, xl, s));
                    }
                }
                out
            })
            .collect()
    });
    let mut channels = vec![Vec::with_capacity(ni * nx * ns); 3];
    for v in planes.iter().flatten() {
        for c in 0..3 {
            channels[c].push(v[c]);
        }
    }
    AttributeVolume::new(volume.dims(), channels)
}

/// Coherence evaluated only on the voxels of one section (with full 3D cubes).
pub fn gtc_section(
    volume: &SeismicVolume,
    params: &GtcParams,
    axis: SectionAxis,
    index: usize,
    workers: usize,
) -> Result<Vec<[f64; 3]>> {
    params.validate(volume)?;
    let section = volume.extract_section(axis, index)?;
    let (rows, cols) = section.shape();
    let lines: Vec<Vec<[f64; 3]>> = with_workers(workers, || {
        (0..rows)
            .into_par_iter()
            .map(|r| {
                (0..cols)
                    .map(|c| {
                        let (i, j, k) = SeismicVolume::section_to_volume(axis, index, r, c);
                        gtc_voxel(volume, params, i, j, k)
                    })
                    .collect()
            })
            .collect()
    });
    Ok(lines.into_iter().flatten().collect())
}
