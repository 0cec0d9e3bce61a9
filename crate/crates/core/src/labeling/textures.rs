//! Synthetic texture patches and image-level datasets for the labeling
//! workflow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::{AugmentedDataset, PatchSource};
use crate::error::{invalid, Result};
use crate::volume::Section2D;

/// Sinusoidal layering along the columns (depth), shifted by `phase`
/// samples, plus white noise.
pub fn layered_patch(rows: usize, cols: usize, period: f64, phase: f64, noise_std: f64, rng: &mut ChaCha8Rng) -> Section2D {
    let noise: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Section2D::from_fn(rows, cols, |r, c| {
        ((2.0 * std::f64::consts::PI * (c as f64 + phase) / period).sin() + noise_std * noise[r * cols + c]) as f32
    })
}

fn box_blur(v: &[f64], rows: usize, cols: usize, radius: usize) -> Vec<f64> {
    let rad = radius as isize;
    let at = |r: isize, c: isize| v[(r.clamp(0, rows as isize - 1) as usize) * cols + c.clamp(0, cols as isize - 1) as usize];
    let mut out = vec![0.0; v.len()];
    for r in 0..rows as isize {
        for c in 0..cols as isize {
            let mut acc = 0.0;
            for a in -rad..=rad {
                for b in -rad..=rad {
                    acc += at(r + a, c + b);
                }
            }
            out[r as usize * cols + c as usize] = acc / ((2 * rad + 1) * (2 * rad + 1)) as f64;
        }
    }
    out
}

/// Band-passed Gaussian noise (difference of box blurs) with the given
/// standard deviation, shifted by `offset`.
pub fn chaotic_patch(rows: usize, cols: usize, std: f64, offset: f64, rng: &mut ChaCha8Rng) -> Section2D {
    let white: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    let fine = box_blur(&white, rows, cols, 1);
    let coarse = box_blur(&white, rows, cols, 3);
    let band: Vec<f64> = fine.iter().zip(&coarse).map(|(a, b)| a - b).collect();
    let n = band.len() as f64;
    let mean = band.iter().sum::<f64>() / n;
    let sd = (band.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if sd > 0.0 { std / sd } else { 0.0 };
    Section2D::from_grid(rows, cols, band.iter().map(|x| (offset + (x - mean) * scale) as f32).collect())
        .expect("non-empty patch")
}

/// Which half of a composite image holds the chaotic texture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Half {
    Top,
    Bottom,
    Left,
    Right,
}

impl Half {
    pub const ALL: [Half; 4] = [Half::Top, Half::Bottom, Half::Left, Half::Right];

    pub fn contains(self, r: usize, c: usize, side: usize) -> bool {
        match self {
            Half::Top => r < side / 2,
            Half::Bottom => r >= side / 2,
            Half::Left => c < side / 2,
            Half::Right => c >= side / 2,
        }
    }

    /// Distance in pixels from the seam between the halves.
    pub fn seam_distance(self, r: usize, c: usize, side: usize) -> f64 {
        let seam = side as f64 / 2.0 - 0.5;
        match self {
            Half::Top | Half::Bottom => (r as f64 - seam).abs(),
            Half::Left | Half::Right => (c as f64 - seam).abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompositeSpec {
    pub images: usize,
    pub side: usize,
    pub period: f64,
    pub layered_noise: f64,
    /// Layer depths vary by up to this many samples between images; half a
    /// period or more gives every phase.
    pub phase_jitter: f64,
    pub chaotic_std: f64,
    /// Mean amplitude of the chaotic texture relative to the layering.
    pub chaotic_offset: f64,
    /// Chaotic halves used by the composite images, in turn.
    pub halves: Vec<Half>,
    pub seed: u64,
}

impl Default for CompositeSpec {
    fn default() -> Self {
        Self {
            images: 200,
            side: 64,
            period: 8.0,
            layered_noise: 0.1,
            phase_jitter: 4.0,
            chaotic_std: 0.5,
            chaotic_offset: 2.0,
            halves: Half::ALL.to_vec(),
            seed: 0,
        }
    }
}

/// Image-level dataset plus the pixel truth it was built from.
#[derive(Clone, Debug)]
pub struct CompositeDataset {
    pub data: AugmentedDataset,
    /// Row-major pixel classes of each image (0 layered, 1 chaotic).
    pub truth: Vec<Vec<u8>>,
    /// Chaotic half of each composite image; `None` for pure layered images.
    pub layout: Vec<Option<Half>>,
}

impl CompositeDataset {
    /// Share of correctly labelled pixels at least `margin` pixels from a
    /// seam, over composite images only.
    pub fn composite_accuracy(&self, labels: &[Vec<u8>], margin: f64) -> f64 {
        let side = self.data.image_shape.0;
        let (mut hit, mut total) = (0usize, 0usize);
        for (n, half) in self.layout.iter().enumerate() {
            let Some(half) = half else { continue };
            for r in 0..side {
                for c in 0..side {
                    if half.seam_distance(r, c, side) < margin {
                        continue;
                    }
                    let p = r * side + c;
                    total += 1;
                    hit += usize::from(labels[n][p] == self.truth[n][p]);
                }
            }
        }
        hit as f64 / total.max(1) as f64
    }
}

/// Half of the images are pure layering (label 0); the other half put a
/// brighter chaotic texture in one half of a layered image (label 1), with
/// the chaotic half cycling through `spec.halves`.
pub fn composite_dataset(spec: &CompositeSpec) -> Result<CompositeDataset> {
    if spec.images < 2 || spec.side < 4 {
        return Err(invalid("composite dataset needs at least two images of side 4"));
    }
    if spec.halves.is_empty() {
        return Err(invalid("composite dataset needs at least one chaotic half"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let side = spec.side;
    let mut images = Vec::with_capacity(spec.images);
    let mut labels = Vec::with_capacity(spec.images);
    let mut truth = Vec::with_capacity(spec.images);
    let mut layout = Vec::with_capacity(spec.images);
    for n in 0..spec.images {
        let phase = if spec.phase_jitter > 0.0 {
            rng.random_range(-spec.phase_jitter..=spec.phase_jitter)
        } else {
            0.0
        };
        let layered = layered_patch(side, side, spec.period, phase, spec.layered_noise, &mut rng);
        if n % 2 == 0 {
            images.push(layered);
            labels.push(0);
            truth.push(vec![0u8; side * side]);
            layout.push(None);
            continue;
        }
        let half = spec.halves[(n / 2) % spec.halves.len()];
        let chaos = chaotic_patch(side, side, spec.chaotic_std, spec.chaotic_offset, &mut rng);
        let mut t = vec![0u8; side * side];
        let image = Section2D::from_fn(side, side, |r, c| {
            if half.contains(r, c, side) {
                t[r * side + c] = 1;
                chaos.get(r, c)
            } else {
                layered.get(r, c)
            }
        });
        images.push(image);
        labels.push(1);
        truth.push(t);
        layout.push(Some(half));
    }
    let sources = (0..spec.images)
        .map(|_| PatchSource { volume: "synthetic".into(), row: 0, col: 0 })
        .collect();
    Ok(CompositeDataset {
        data: AugmentedDataset::from_images(&images, labels, 2, sources)?,
        truth,
        layout,
    })
}

/// `count` layered patches followed by `count` chaotic patches.
pub fn texture_corpus(count: usize, side: usize, seed: u64) -> Vec<Section2D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Section2D> = (0..count)
        .map(|_| {
            let phase = rng.random_range(0.0..8.0);
            layered_patch(side, side, 8.0, phase, 0.2, &mut rng)
        })
        .collect();
    out.extend((0..count).map(|_| chaotic_patch(side, side, 0.5, 0.0, &mut rng)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composite_layout() {
        let spec = CompositeSpec { images: 10, side: 16, halves: Half::ALL.to_vec(), ..CompositeSpec::default() };
        let ds = composite_dataset(&spec).unwrap();
        assert_eq!(ds.data.len(), 10);
        assert_eq!(ds.data.labels, vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1]);
        assert_eq!(ds.layout[1], Some(Half::Top));
        assert_eq!(ds.layout[3], Some(Half::Bottom));
        assert_eq!(ds.truth[1].iter().filter(|&&t| t == 1).count(), 128);
        assert!(ds.truth[0].iter().all(|&t| t == 0));
        // the truth itself scores perfectly; its complement scores zero
        assert_eq!(ds.composite_accuracy(&ds.truth, 3.0), 1.0);
        let flipped: Vec<Vec<u8>> = ds.truth.iter().map(|t| t.iter().map(|v| 1 - v).collect()).collect();
        assert_eq!(ds.composite_accuracy(&flipped, 3.0), 0.0);
    }

    #[test]
    fn seam_distance() {
        assert_eq!(Half::Left.seam_distance(0, 7, 16), 0.5);
        assert_eq!(Half::Top.seam_distance(10, 0, 16), 2.5);
    }

    #[test]
    fn chaotic_patch_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = chaotic_patch(32, 32, 0.5, 2.0, &mut rng);
        let v = p.to_f64();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        assert!((mean - 2.0).abs() < 1e-6 && (sd - 0.5).abs() < 1e-6);
    }
}
