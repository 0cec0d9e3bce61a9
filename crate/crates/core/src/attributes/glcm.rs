//! Gray-level co-occurrence texture features.

use serde::{Deserialize, Serialize};

use crate::error::{dim, invalid, Result};
use crate::volume::Section2D;

/// Per-offset feature order.
pub const GLCM_FEATURES: [&str; 4] = ["contrast", "energy", "entropy", "homogeneity"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlcmParams {
    pub levels: usize,
    /// (row, col) displacements.
    pub offsets: Vec<[isize; 2]>,
    /// Odd side of the sliding window used for attribute maps.
    pub window: usize,
}

impl Default for GlcmParams {
    fn default() -> Self {
        Self {
            levels: 16,
            offsets: vec![[0, 1], [1, 0], [1, 1], [1, -1]],
            window: 9,
        }
    }
}

fn quantize(window: &[f64], levels: usize) -> Vec<usize> {
    let (lo, hi) = window
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return vec![0; window.len()];
    }
    window
        .iter()
        .map(|&v| (((v - lo) / (hi - lo) * levels as f64) as usize).min(levels - 1))
        .collect()
}

fn pair_probabilities(q: &[usize], rows: usize, cols: usize, levels: usize, offset: [isize; 2]) -> Result<Vec<f64>> {
    let mut counts = vec![0u64; levels * levels];
    let mut total = 0u64;
    for r in 0..rows as isize {
        let r2 = r + offset[0];
        if r2 < 0 || r2 >= rows as isize {
            continue;
        }
        for c in 0..cols as isize {
            let c2 = c + offset[1];
            if c2 < 0 || c2 >= cols as isize {
                continue;
            }
            let a = q[(r * cols as isize + c) as usize];
            let b = q[(r2 * cols as isize + c2) as usize];
            counts[a * levels + b] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(invalid(format!(
            "offset {offset:?} leaves no pixel pairs in a {rows}x{cols} window"
        )));
    }
    Ok(counts.iter().map(|&n| n as f64 / total as f64).collect())
}

fn check(window: &[f64], rows: usize, cols: usize, levels: usize) -> Result<()> {
    if levels < 2 {
        return Err(invalid("GLCM needs at least two gray levels"));
    }
    if rows * cols != window.len() || window.is_empty() {
        return Err(dim(format!("window of {} values is not {rows}x{cols}", window.len())));
    }
    if window.iter().any(|v| !v.is_finite()) {
        return Err(invalid("GLCM window contains non-finite values"));
    }
    Ok(())
}

/// Normalized co-occurrence matrix (`levels x levels`, row-major) for one offset.
pub fn glcm_matrix(window: &[f64], rows: usize, cols: usize, levels: usize, offset: [isize; 2]) -> Result<Vec<f64>> {
    check(window, rows, cols, levels)?;
    pair_probabilities(&quantize(window, levels), rows, cols, levels, offset)
}

/// Contrast, energy (angular second moment), entropy and homogeneity for each offset.
pub fn glcm_features(
    window: &[f64],
    rows: usize,
    cols: usize,
    levels: usize,
    offsets: &[[isize; 2]],
) -> Result<Vec<f64>> {
    check(window, rows, cols, levels)?;
    let q = quantize(window, levels);
    let mut out = Vec::with_capacity(4 * offsets.len());
    for &off in offsets {
        let p = pair_probabilities(&q, rows, cols, levels, off)?;
        let (mut contrast, mut energy, mut entropy, mut homogeneity) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..levels {
            for j in 0..levels {
                let v = p[i * levels + j];
                if v == 0.0 {
                    continue;
                }
                let d2 = ((i as isize - j as isize) * (i as isize - j as isize)) as f64;
                contrast += d2 * v;
                energy += v * v;
                entropy -= v * v.ln();
                homogeneity += v / (1.0 + d2);
            }
        }
        out.extend_from_slice(&[contrast, energy, entropy.max(0.0), homogeneity]);
    }
    Ok(out)
}

/// Sliding-window GLCM features per pixel, averaged over the offsets.
pub fn glcm_section(section: &Section2D, params: &GlcmParams) -> Result<Vec<[f64; 4]>> {
    if params.window < 2 {
        return Err(invalid("GLCM window must be at least 2"));
    }
    let (rows, cols) = section.shape();
    let w = params.window as isize;
    let h = w / 2;
    let mut buf = Vec::with_capacity((w * w) as usize);
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows as isize {
        for c in 0..cols as isize {
            buf.clear();
            for a in 0..w {
                for b in 0..w {
                    buf.push(section.get_clamped(r - h + a, c - h + b) as f64);
                }
            }
            let f = glcm_features(&buf, w as usize, w as usize, params.levels, &params.offsets)?;
            let mut mean = [0.0; 4];
            for chunk in f.chunks(4) {
                for k in 0..4 {
                    mean[k] += chunk[k] / params.offsets.len() as f64;
                }
            }
            out.push(mean);
        }
    }
    Ok(out)
}
