//! Multi-scale gradient of texture between opposing cubes along each axis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dft::{Dft3, DftScratch};
use super::{with_workers, AttributeVolume};
use crate::error::{invalid, Result};
use crate::volume::{SectionAxis, SeismicVolume};

/// Direction of a gradient: `t` along samples, `x` along crosslines, `y` along inlines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GotAxis {
    T,
    X,
    Y,
}

impl GotAxis {
    /// Index into (inline, crossline, sample).
    fn volume_axis(self) -> usize {
        match self {
            GotAxis::Y => 0,
            GotAxis::X => 1,
            GotAxis::T => 2,
        }
    }
}

impl std::str::FromStr for GotAxis {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t" => Ok(GotAxis::T),
            "x" => Ok(GotAxis::X),
            "y" => Ok(GotAxis::Y),
            other => Err(invalid(format!("unknown GoT axis {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GotParams {
    /// Odd cube edge lengths in ascending order.
    pub scales: Vec<usize>,
    /// Non-negative weights summing to one, one per scale.
    pub weights: Vec<f64>,
    pub axes: Vec<GotAxis>,
}

impl Default for GotParams {
    fn default() -> Self {
        Self {
            scales: vec![9, 13, 17],
            weights: vec![1.0 / 3.0; 3],
            axes: vec![GotAxis::T, GotAxis::X, GotAxis::Y],
        }
    }
}

impl GotParams {
    pub fn validate(&self, volume: &SeismicVolume) -> Result<()> {
        if self.scales.is_empty() || self.axes.is_empty() {
            return Err(invalid("GoT needs at least one scale and one axis"));
        }
        if self.weights.len() != self.scales.len() {
            return Err(invalid("GoT needs exactly one weight per scale"));
        }
        if self.scales.iter().any(|n| n % 2 == 0) {
            return Err(invalid(format!("GoT scales must be odd, got {:?}", self.scales)));
        }
        if self.scales.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("GoT scales must be strictly ascending"));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(invalid("GoT weights must be non-negative"));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("GoT weights sum to {sum}, expected 1")));
        }
        let (ni, nx, ns) = volume.dims();
        let largest = *self.scales.last().unwrap();
        if largest > ni.min(nx).min(ns) {
            return Err(invalid(format!(
                "GoT scale {largest} does not fit the {:?} volume",
                volume.dims()
            )));
        }
        Ok(())
    }
}

/// Fills `out` with the n³ cube whose first corner is `origin` (replicate padding).
fn fill_cube(volume: &SeismicVolume, origin: [isize; 3], n: usize, out: &mut Vec<f64>) {
    out.clear();
    for a in 0..n as isize {
        for b in 0..n as isize {
            for c in 0..n as isize {
                out.push(volume.get_clamped(origin[0] + a, origin[1] + b, origin[2] + c) as f64);
            }
        }
    }
}

/// The two cubes adjacent to a voxel along `axis`: offsets `-n..=-1` and `1..=n`.
pub(crate) fn cube_pair(
    volume: &SeismicVolume,
    axis: GotAxis,
    n: usize,
    voxel: [usize; 3],
    minus: &mut Vec<f64>,
    plus: &mut Vec<f64>,
) {
    let h = (n / 2) as isize;
    let ax = axis.volume_axis();
    let mut lo = [voxel[0] as isize - h, voxel[1] as isize - h, voxel[2] as isize - h];
    lo[ax] = voxel[ax] as isize - n as isize;
    fill_cube(volume, lo, n, minus);
    let mut hi = [voxel[0] as isize - h, voxel[1] as isize - h, voxel[2] as isize - h];
    hi[ax] = voxel[ax] as isize + 1;
    fill_cube(volume, hi, n, plus);
}

struct Workspace {
    dfts: Vec<Dft3>,
    scratch: DftScratch,
    minus: Vec<f64>,
    plus: Vec<f64>,
}

impl Workspace {
    fn new(params: &GotParams) -> Self {
        Self {
            dfts: params.scales.iter().map(|&n| Dft3::new((n, n, n))).collect(),
            scratch: DftScratch::default(),
            minus: Vec::new(),
            plus: Vec::new(),
        }
    }

    fn voxel(&mut self, volume: &SeismicVolume, params: &GotParams, voxel: [usize; 3]) -> f64 {
        let mut total = 0.0;
        for &axis in &params.axes {
            let mut g = 0.0;
            for (k, (&n, &w)) in params.scales.iter().zip(&params.weights).enumerate() {
                if w == 0.0 {
                    continue;
                }
                cube_pair(volume, axis, n, voxel, &mut self.minus, &mut self.plus);
                g += w * self.dfts[k].dissimilarity(&self.minus, &self.plus, &mut self.scratch);
            }
            total += g * g;
        }
        total.sqrt()
    }
}

/// GoT at a single voxel.
pub fn got_voxel(volume: &SeismicVolume, params: &GotParams, il: usize, xl: usize, s: usize) -> Result<f64> {
    params.validate(volume)?;
    Ok(Workspace::new(params).voxel(volume, params, [il, xl, s]))
}

pub fn got3d(volume: &SeismicVolume, params: &GotParams, workers: usize) -> Result<AttributeVolume> {
    params.validate(volume)?;
    let (ni, nx, ns) = volume.dims();
    let planes: Vec<Vec<f64>> = with_workers(workers, || {
        (0..ni)
            .into_par_iter()
            .map_init(
                || Workspace::new(params),
                |ws, il| {
                    let mut out = Vec::with_capacity(nx * ns);
                    for xl in 0..nx {
                        for s in 0..ns {
                            out.push(ws.voxel(volume, params, [il, xl, s]));
                        }
                    }
                    out
                },
            )
            .collect()
    });
    AttributeVolume::new(volume.dims(), vec![planes.concat()])
}

/// GoT evaluated on the voxels of one section, row-major in section layout.
pub fn got_section(
    volume: &SeismicVolume,
    params: &GotParams,
    axis: SectionAxis,
    index: usize,
    workers: usize,
) -> Result<Vec<f64>> {
    params.validate(volume)?;
    let (rows, cols) = volume.extract_section(axis, index)?.shape();
    let lines: Vec<Vec<f64>> = with_workers(workers, || {
        (0..rows)
            .into_par_iter()
            .map_init(
                || Workspace::new(params),
                |ws, r| {
                    (0..cols)
                        .map(|c| {
                            let (i, j, k) = SeismicVolume::section_to_volume(axis, index, r, c);
                            ws.voxel(volume, params, [i, j, k])
                        })
                        .collect()
                },
            )
            .collect()
    });
    Ok(lines.concat())
}
