//! Seeded synthetic volumes with planted faults, salt bodies and texture splits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{SeismicVolume, SectionAxis};
use crate::error::{invalid, Error, Result};

pub const CLASS_BACKGROUND: u8 = 0;
pub const CLASS_FAULT: u8 = 1;
pub const CLASS_SALT: u8 = 2;
pub const CLASS_TEXTURE_B: u8 = 3;

const CLASS_NAMES: [&str; 4] = ["background", "fault", "salt", "texture_b"];

/// Layered background: band-limited random reflectivity (Ricker-filtered) with
/// optional sinusoidal lateral undulation of the horizons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayerSpec {
    /// Ricker peak frequency in cycles per sample.
    pub peak_frequency: f64,
    /// Horizon undulation amplitude in samples (0 keeps traces laterally identical).
    pub undulation_amplitude: f64,
    /// Undulation wavelength in crossline traces.
    pub undulation_wavelength: f64,
    /// Standard deviation of additive white noise, relative to unit peak amplitude.
    pub noise_level: f64,
}

impl Default for LayerSpec {
    fn default() -> Self {
        Self {
            peak_frequency: 0.08,
            undulation_amplitude: 0.0,
            undulation_wavelength: 48.0,
            noise_level: 0.0,
        }
    }
}

/// A fault plane `xl = crossline + dip * (s - s_mid) + strike_slope * (il - il_mid)`.
/// Traces on the high-crossline side are shifted down by `displacement` samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    pub crossline: f64,
    #[serde(default)]
    pub dip: f64,
    #[serde(default)]
    pub strike_slope: f64,
    pub displacement: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SaltShape {
    #[default]
    Ellipsoid,
    /// Elliptic cylinder running along the inline axis.
    Cylinder,
}

/// A chaotic-texture body. `center` and `radii` are (inline, crossline, sample);
/// the crossline center moves by `drift` traces per inline away from `center[0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaltSpec {
    #[serde(default)]
    pub shape: SaltShape,
    pub center: [f64; 3],
    pub radii: [f64; 3],
    #[serde(default)]
    pub drift: f64,
    #[serde(default = "default_salt_amplitude")]
    pub amplitude: f64,
}

fn default_salt_amplitude() -> f64 {
    1.5
}

impl SaltSpec {
    /// Crossline center of the body's cross-section on inline `il`.
    pub fn crossline_center(&self, il: f64) -> f64 {
        self.center[1] + self.drift * (il - self.center[0])
    }

    /// Normalized radial coordinate; the body is where this is <= 1.
    pub fn radial(&self, il: f64, xl: f64, s: f64) -> f64 {
        let dx = (xl - self.crossline_center(il)) / self.radii[1];
        let ds = (s - self.center[2]) / self.radii[2];
        let mut r2 = dx * dx + ds * ds;
        if self.shape == SaltShape::Ellipsoid {
            let di = (il - self.center[0]) / self.radii[0];
            r2 += di * di;
        }
        r2.sqrt()
    }

    pub fn contains(&self, il: usize, xl: usize, s: usize) -> bool {
        self.radial(il as f64, xl as f64, s as f64) <= 1.0
    }
}

/// Two-texture split along crossline: traces before `boundary` carry a
/// horizontally layered sinusoid, the rest band-passed noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfSpaceSpec {
    /// First crossline of the noise texture.
    pub boundary: usize,
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default = "default_noise_std")]
    pub noise_std: f64,
}

fn default_period() -> f64 {
    8.0
}

fn default_noise_std() -> f64 {
    0.25
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    /// (inline, crossline, sample) counts.
    pub dims: [usize; 3],
    pub seed: u64,
    pub layers: LayerSpec,
    pub faults: Vec<FaultSpec>,
    pub salts: Vec<SaltSpec>,
    pub half_space: Option<HalfSpaceSpec>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            dims: [64, 64, 64],
            seed: 0,
            layers: LayerSpec::default(),
            faults: Vec::new(),
            salts: Vec::new(),
            half_space: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlantedStructure {
    Fault(FaultSpec),
    Salt(SaltSpec),
    HalfSpace(HalfSpaceSpec),
}

/// Voxel labels for a synthetic volume.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    dims: (usize, usize, usize),
    labels: Vec<u8>,
    pub class_names: Vec<String>,
    pub planted: Vec<PlantedStructure>,
}

impl GroundTruth {
    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, il: usize, xl: usize, s: usize) -> u8 {
        self.labels[(il * self.dims.1 + xl) * self.dims.2 + s]
    }

    /// Labels of a section in the same row/column layout as `extract_section`.
    pub fn section(&self, axis: SectionAxis, index: usize) -> Result<Vec<u8>> {
        let (ni, nx, ns) = self.dims;
        let (rows, cols, len) = match axis {
            SectionAxis::Inline => (nx, ns, ni),
            SectionAxis::Crossline => (ni, ns, nx),
            SectionAxis::TimeSlice => (ni, nx, ns),
        };
        if index >= len {
            return Err(Error::OutOfRange(format!("{axis} index {index}")));
        }
        let mut out = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let (i, j, k) = SeismicVolume::section_to_volume(axis, index, r, c);
                out.push(self.label(i, j, k));
            }
        }
        Ok(out)
    }

    pub fn count(&self, class: u8) -> usize {
        self.labels.iter().filter(|&&l| l == class).count()
    }
}

/// Signed perpendicular distance from a voxel to a fault plane (positive on
/// the hanging-wall side).
pub fn fault_plane_distance(f: &FaultSpec, dims: [usize; 3], il: f64, xl: f64, s: f64) -> f64 {
    let norm = (1.0 + f.dip * f.dip + f.strike_slope * f.strike_slope).sqrt();
    fault_plane_signed(f, dims, il, xl, s) / norm
}

fn fault_plane_signed(f: &FaultSpec, dims: [usize; 3], il: f64, xl: f64, s: f64) -> f64 {
    let il_mid = (dims[0] as f64 - 1.0) / 2.0;
    let s_mid = (dims[2] as f64 - 1.0) / 2.0;
    xl - (f.crossline + f.dip * (s - s_mid) + f.strike_slope * (il - il_mid))
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let [ni, nx, ns] = self.dims;
        if ni == 0 || nx == 0 || ns == 0 {
            return Err(invalid("synthetic dimensions must be >= 1"));
        }
        let l = &self.layers;
        if !(l.peak_frequency > 0.0 && l.peak_frequency <= 0.5) {
            return Err(invalid("layers.peak_frequency must lie in (0, 0.5]"));
        }
        if l.undulation_wavelength <= 0.0 || l.noise_level < 0.0 || l.undulation_amplitude < 0.0 {
            return Err(invalid("layer undulation and noise parameters must be non-negative"));
        }
        let (xmax, imax, smax) = ((nx - 1) as f64, (ni - 1) as f64, (ns - 1) as f64);
        for (k, f) in self.faults.iter().enumerate() {
            if f.displacement == 0.0 {
                return Err(invalid(format!(
                    "fault {k} has zero displacement and would be undetectable"
                )));
            }
            if !f.displacement.is_finite() || !f.dip.is_finite() || !f.strike_slope.is_finite() {
                return Err(invalid(format!("fault {k} has non-finite parameters")));
            }
            for il in [0.0, imax] {
                for s in [0.0, smax] {
                    let x = xl_on_plane(f, self.dims, il, s);
                    if !(0.0..=xmax).contains(&x) {
                        return Err(Error::OutOfRange(format!(
                            "fault {k} leaves the volume at inline {il}, sample {s} (crossline {x:.2})"
                        )));
                    }
                }
            }
        }
        for (k, salt) in self.salts.iter().enumerate() {
            let [ci, _, cs] = salt.center;
            let [ri, rx, rs] = salt.radii;
            if rx <= 0.0 || rs <= 0.0 || (salt.shape == SaltShape::Ellipsoid && ri <= 0.0) {
                return Err(invalid(format!("salt body {k} needs positive radii")));
            }
            let (i_lo, i_hi) = match salt.shape {
                SaltShape::Ellipsoid => (ci - ri, ci + ri),
                SaltShape::Cylinder => (0.0, imax),
            };
            let inside = |lo: f64, hi: f64, max: f64| lo >= 0.0 && hi <= max;
            let x_ok = [i_lo, i_hi].iter().all(|&il| {
                let cx = salt.crossline_center(il);
                inside(cx - rx, cx + rx, xmax)
            });
            if !inside(i_lo, i_hi, imax) || !inside(cs - rs, cs + rs, smax) || !x_ok {
                return Err(Error::OutOfRange(format!(
                    "salt body {k} extends outside the volume"
                )));
            }
        }
        if let Some(h) = &self.half_space {
            if h.boundary == 0 || h.boundary >= nx {
                return Err(Error::OutOfRange(format!(
                    "half-space boundary {} must lie strictly inside 1..{}",
                    h.boundary, nx
                )));
            }
            if h.period <= 0.0 || h.noise_std <= 0.0 {
                return Err(invalid("half-space period and noise_std must be positive"));
            }
        }
        Ok(())
    }
}

fn xl_on_plane(f: &FaultSpec, dims: [usize; 3], il: f64, s: f64) -> f64 {
    -fault_plane_signed(f, dims, il, 0.0, s)
}

/// Ricker wavelet sampled on `-half..=half` with peak frequency `f` (cycles/sample).
fn ricker(f: f64) -> Vec<f64> {
    let half = (1.5 / f).ceil() as isize;
    (-half..=half)
        .map(|t| {
            let a = (std::f64::consts::PI * f * t as f64).powi(2);
            (1.0 - 2.0 * a) * (-a).exp()
        })
        .collect()
}

/// A long band-limited reflectivity trace, normalized to unit peak.
fn seismogram(rng: &mut ChaCha8Rng, len: usize, f: f64) -> Vec<f64> {
    let refl: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let w = ricker(f);
    let half = (w.len() / 2) as isize;
    let mut out = vec![0.0; len];
    for (z, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, wk) in w.iter().enumerate() {
            let idx = z as isize + k as isize - half;
            if idx >= 0 && (idx as usize) < len {
                acc += wk * refl[idx as usize];
            }
        }
        *o = acc;
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        out.iter_mut().for_each(|v| *v /= peak);
    }
    out
}

fn sample_linear(trace: &[f64], z: f64) -> f64 {
    let z = z.clamp(0.0, (trace.len() - 1) as f64);
    let z0 = z.floor() as usize;
    let t = z - z0 as f64;
    if t == 0.0 || z0 + 1 >= trace.len() {
        trace[z0]
    } else {
        trace[z0] * (1.0 - t) + trace[z0 + 1] * t
    }
}

/// Separable box smoothing of radius `r` with replicate edges.
fn box_smooth(data: &[f64], dims: [usize; 3], r: usize) -> Vec<f64> {
    box_smooth_axes(data, dims, [r; 3])
}

/// Separable box filter with a radius per axis, clamped at the edges.
fn box_smooth_axes(data: &[f64], dims: [usize; 3], radii: [usize; 3]) -> Vec<f64> {
    let mut cur = data.to_vec();
    let strides = [dims[1] * dims[2], dims[2], 1];
    for axis in 0..3 {
        let n = dims[axis];
        let r = radii[axis];
        let mut next = vec![0.0; cur.len()];
        for (idx, out) in next.iter_mut().enumerate() {
            let pos = (idx / strides[axis]) % n;
            let base = idx - pos * strides[axis];
            let mut acc = 0.0;
            for d in -(r as isize)..=(r as isize) {
                let p = (pos as isize + d).clamp(0, n as isize - 1) as usize;
                acc += cur[base + p * strides[axis]];
            }
            *out = acc / (2 * r + 1) as f64;
        }
        cur = next;
    }
    cur
}

fn normalized(mut v: Vec<f64>, std: f64) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let scale = if var > 0.0 { std / var.sqrt() } else { 0.0 };
    v.iter_mut().for_each(|x| *x = (*x - mean) * scale);
    v
}

/// Builds a deterministic synthetic volume and its voxel-exact labels.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(SeismicVolume, GroundTruth)> {
    spec.validate()?;
    let [ni, nx, ns] = spec.dims;
    let n = ni * nx * ns;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut amp = vec![0f64; n];
    let mut labels = vec![CLASS_BACKGROUND; n];
    let idx = |i: usize, j: usize, k: usize| (i * nx + j) * ns + k;
    let layers = &spec.layers;

    if let Some(h) = &spec.half_space {
        let white: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let fine = box_smooth(&white, spec.dims, 1);
        let coarse = box_smooth(&white, spec.dims, 3);
        let band: Vec<f64> = fine.iter().zip(&coarse).map(|(a, b)| a - b).collect();
        let band = normalized(band, h.noise_std);
        for i in 0..ni {
            for j in 0..nx {
                for k in 0..ns {
                    let p = idx(i, j, k);
                    if j < h.boundary {
                        amp[p] = (2.0 * std::f64::consts::PI * k as f64 / h.period).sin();
                    } else {
                        amp[p] = band[p];
                        labels[p] = CLASS_TEXTURE_B;
                    }
                }
            }
        }
    } else {
        let max_shift = spec
            .faults
            .iter()
            .map(|f| f.displacement.abs())
            .sum::<f64>()
            + layers.undulation_amplitude;
        let margin = max_shift.ceil() as usize + 4;
        let trace = seismogram(&mut rng, ns + 2 * margin, layers.peak_frequency);
        for i in 0..ni {
            for j in 0..nx {
                let undulation = if layers.undulation_amplitude > 0.0 {
                    layers.undulation_amplitude
                        * (2.0 * std::f64::consts::PI * j as f64 / layers.undulation_wavelength)
                            .sin()
                } else {
                    0.0
                };
                for k in 0..ns {
                    let mut shift = undulation;
                    for f in &spec.faults {
                        if fault_plane_signed(f, spec.dims, i as f64, j as f64, k as f64) > 0.0 {
                            shift -= f.displacement;
                        }
                    }
                    amp[idx(i, j, k)] = sample_linear(&trace, margin as f64 + k as f64 + shift);
                }
            }
        }
    }

    if !spec.salts.is_empty() {
        let white: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        // smoother along inline so neighbouring sections stay alike
        let chaos = normalized(box_smooth_axes(&white, spec.dims, [4, 1, 1]), 1.0);
        for salt in &spec.salts {
            for i in 0..ni {
                // the texture travels with the body as it drifts
                let shift = (salt.crossline_center(i as f64) - salt.center[1]).round() as isize;
                for j in 0..nx {
                    let src = (j as isize - shift).rem_euclid(nx as isize) as usize;
                    for k in 0..ns {
                        if salt.contains(i, j, k) {
                            let p = idx(i, j, k);
                            amp[p] = salt.amplitude * chaos[idx(i, src, k)];
                            labels[p] = CLASS_SALT;
                        }
                    }
                }
            }
        }
    }

    for f in &spec.faults {
        for i in 0..ni {
            for j in 0..nx {
                for k in 0..ns {
                    let d = fault_plane_distance(f, spec.dims, i as f64, j as f64, k as f64);
                    if d.abs() <= 0.5 {
                        labels[idx(i, j, k)] = CLASS_FAULT;
                    }
                }
            }
        }
    }

    if layers.noise_level > 0.0 {
        for a in amp.iter_mut() {
            *a += layers.noise_level * rng.sample::<f64, _>(StandardNormal);
        }
    }

    let volume = SeismicVolume::new(ni, nx, ns, amp.iter().map(|&a| a as f32).collect())?;
    let mut planted = Vec::new();
    planted.extend(spec.faults.iter().cloned().map(PlantedStructure::Fault));
    planted.extend(spec.salts.iter().cloned().map(PlantedStructure::Salt));
    planted.extend(spec.half_space.iter().cloned().map(PlantedStructure::HalfSpace));
    let truth = GroundTruth {
        dims: (ni, nx, ns),
        labels,
        class_names: CLASS_NAMES.iter().map(|s| s.to_string()).collect(),
        planted,
    };
    Ok((volume, truth))
}
