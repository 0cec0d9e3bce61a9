//! Seismic volumes, 2D sections, and their on-disk formats.
//!
//! Amplitudes are stored inline-major with the sample axis fastest:
//! `index(il, xl, s) = (il * n_crossline + xl) * n_samples + s`.

mod segy;
mod svol;
mod synth;

pub use segy::{ibm_to_ieee, load_segy, write_segy, write_segy_with, SegyOptions};
pub use svol::{read_svol, write_svol, SVOL_MAGIC, SVOL_VERSION};
pub use synth::{
    fault_plane_distance, generate_synthetic, FaultSpec, GroundTruth, HalfSpaceSpec, LayerSpec,
    PlantedStructure, SaltShape, SaltSpec, SyntheticSpec, CLASS_BACKGROUND, CLASS_FAULT,
    CLASS_SALT, CLASS_TEXTURE_B,
};

use serde::{Deserialize, Serialize};

use crate::error::{dim, Error, Result};

/// Vertical axis meaning of a volume.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    #[default]
    Time,
    Depth,
}

/// A dense post-stack seismic volume.
#[derive(Clone, Debug, PartialEq)]
pub struct SeismicVolume {
    n_inline: usize,
    n_crossline: usize,
    n_samples: usize,
    /// Microseconds for time volumes, depth units otherwise.
    pub sample_interval: f32,
    pub domain: DomainKind,
    amplitudes: Vec<f32>,
}

impl SeismicVolume {
    pub fn new(
        n_inline: usize,
        n_crossline: usize,
        n_samples: usize,
        amplitudes: Vec<f32>,
    ) -> Result<Self> {
        if n_inline == 0 || n_crossline == 0 || n_samples == 0 {
            return Err(dim(format!(
                "volume dimensions must be >= 1, got {n_inline}x{n_crossline}x{n_samples}"
            )));
        }
        let expected = n_inline
            .checked_mul(n_crossline)
            .and_then(|v| v.checked_mul(n_samples))
            .ok_or_else(|| dim("volume size overflows usize"))?;
        if amplitudes.len() != expected {
            return Err(dim(format!(
                "amplitude count {} does not match {}x{}x{}",
                amplitudes.len(),
                n_inline,
                n_crossline,
                n_samples
            )));
        }
        if let Some(pos) = amplitudes.iter().position(|a| !a.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self {
            n_inline,
            n_crossline,
            n_samples,
            sample_interval: 4000.0,
            domain: DomainKind::Time,
            amplitudes,
        })
    }

    pub fn zeros(n_inline: usize, n_crossline: usize, n_samples: usize) -> Result<Self> {
        Self::new(
            n_inline,
            n_crossline,
            n_samples,
            vec![0.0; n_inline * n_crossline * n_samples],
        )
    }

    pub fn from_fn(
        dims: (usize, usize, usize),
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let (ni, nx, ns) = dims;
        let mut data = Vec::with_capacity(ni * nx * ns);
        for i in 0..ni {
            for j in 0..nx {
                for k in 0..ns {
                    data.push(f(i, j, k));
                }
            }
        }
        Self::new(ni, nx, ns, data)
    }

    pub fn with_sampling(mut self, sample_interval: f32, domain: DomainKind) -> Self {
        self.sample_interval = sample_interval;
        self.domain = domain;
        self
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_inline, self.n_crossline, self.n_samples)
    }

    pub fn n_inline(&self) -> usize {
        self.n_inline
    }

    pub fn n_crossline(&self) -> usize {
        self.n_crossline
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn amplitudes(&self) -> &[f32] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<f32> {
        self.amplitudes
    }

    #[inline]
    pub fn index(&self, il: usize, xl: usize, s: usize) -> usize {
        (il * self.n_crossline + xl) * self.n_samples + s
    }

    #[inline]
    pub fn get(&self, il: usize, xl: usize, s: usize) -> f32 {
        self.amplitudes[self.index(il, xl, s)]
    }

    /// Sample with replicate padding: out-of-range coordinates clamp to the border.
    #[inline]
    pub fn get_clamped(&self, il: isize, xl: isize, s: isize) -> f32 {
        let i = il.clamp(0, self.n_inline as isize - 1) as usize;
        let j = xl.clamp(0, self.n_crossline as isize - 1) as usize;
        let k = s.clamp(0, self.n_samples as isize - 1) as usize;
        self.get(i, j, k)
    }

    /// One trace (all samples at a given inline/crossline).
    pub fn trace(&self, il: usize, xl: usize) -> &[f32] {
        let start = self.index(il, xl, 0);
        &self.amplitudes[start..start + self.n_samples]
    }

    /// Multiplies every amplitude by `c`.
    pub fn scaled(&self, c: f32) -> Result<Self> {
        let data = self.amplitudes.iter().map(|a| a * c).collect();
        Ok(Self::new(self.n_inline, self.n_crossline, self.n_samples, data)?
            .with_sampling(self.sample_interval, self.domain))
    }

    pub fn axis_len(&self, axis: SectionAxis) -> usize {
        match axis {
            SectionAxis::Inline => self.n_inline,
            SectionAxis::Crossline => self.n_crossline,
            SectionAxis::TimeSlice => self.n_samples,
        }
    }

    /// Volume coordinates of section pixel `(row, col)` on `axis` at `index`.
    #[inline]
    pub fn section_to_volume(
        axis: SectionAxis,
        index: usize,
        row: usize,
        col: usize,
    ) -> (usize, usize, usize) {
        match axis {
            SectionAxis::Inline => (index, row, col),
            SectionAxis::Crossline => (row, index, col),
            SectionAxis::TimeSlice => (row, col, index),
        }
    }

    pub fn section_shape(&self, axis: SectionAxis) -> (usize, usize) {
        match axis {
            SectionAxis::Inline => (self.n_crossline, self.n_samples),
            SectionAxis::Crossline => (self.n_inline, self.n_samples),
            SectionAxis::TimeSlice => (self.n_inline, self.n_crossline),
        }
    }

    /// Extracts the 2D slab at `index` along `axis`.
    pub fn extract_section(&self, axis: SectionAxis, index: usize) -> Result<Section2D> {
        let len = self.axis_len(axis);
        if index >= len {
            return Err(Error::OutOfRange(format!(
                "{axis} index {index} outside 0..{len}"
            )));
        }
        let (rows, cols) = self.section_shape(axis);
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let (i, j, k) = Self::section_to_volume(axis, index, r, c);
                values.push(self.get(i, j, k));
            }
        }
        Ok(Section2D {
            axis,
            index,
            rows,
            cols,
            values,
            source_dims: self.dims(),
        })
    }

    /// Writes a section back into its slab.
    pub fn insert_section(&mut self, section: &Section2D) -> Result<()> {
        if section.source_dims != self.dims() {
            return Err(dim(format!(
                "section from a {:?} volume cannot be inserted into {:?}",
                section.source_dims,
                self.dims()
            )));
        }
        if section.index >= self.axis_len(section.axis) {
            return Err(Error::OutOfRange(format!(
                "{} index {}",
                section.axis, section.index
            )));
        }
        if let Some(pos) = section.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        for r in 0..section.rows {
            for c in 0..section.cols {
                let (i, j, k) = Self::section_to_volume(section.axis, section.index, r, c);
                let idx = self.index(i, j, k);
                self.amplitudes[idx] = section.values[r * section.cols + c];
            }
        }
        Ok(())
    }
}

/// Slicing axis for a 2D section.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectionAxis {
    Inline,
    Crossline,
    TimeSlice,
}

impl std::fmt::Display for SectionAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SectionAxis::Inline => "inline",
            SectionAxis::Crossline => "crossline",
            SectionAxis::TimeSlice => "time",
        })
    }
}

impl std::str::FromStr for SectionAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inline" | "il" => Ok(SectionAxis::Inline),
            "crossline" | "xl" => Ok(SectionAxis::Crossline),
            "time" | "timeslice" | "time-slice" | "depth" => Ok(SectionAxis::TimeSlice),
            other => Err(Error::InvalidParameter(format!("unknown axis {other:?}"))),
        }
    }
}

/// A 2D slab of a volume. Rows and columns follow the two remaining volume
/// axes in order, so vertical sections have the sample (depth) axis as columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Section2D {
    pub axis: SectionAxis,
    pub index: usize,
    rows: usize,
    cols: usize,
    values: Vec<f32>,
    /// Geometry of the volume this section came from.
    pub source_dims: (usize, usize, usize),
}

impl Section2D {
    /// A free-standing section not tied to a particular volume slab.
    pub fn from_grid(rows: usize, cols: usize, values: Vec<f32>) -> Result<Self> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(dim(format!(
                "section grid {}x{} with {} values",
                rows,
                cols,
                values.len()
            )));
        }
        Ok(Self {
            axis: SectionAxis::Inline,
            index: 0,
            rows,
            cols,
            values,
            source_dims: (1, rows, cols),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                values.push(f(r, c));
            }
        }
        Self::from_grid(rows, cols, values).expect("non-empty grid")
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn get_clamped(&self, r: isize, c: isize) -> f32 {
        let r = r.clamp(0, self.rows as isize - 1) as usize;
        let c = c.clamp(0, self.cols as isize - 1) as usize;
        self.get(r, c)
    }

    /// Values as `f64` in row-major order.
    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counting(ni: usize, nx: usize, ns: usize) -> SeismicVolume {
        SeismicVolume::from_fn((ni, nx, ns), |i, j, k| (i * 100 + j * 10 + k) as f32).unwrap()
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        assert!(SeismicVolume::new(0, 1, 1, vec![]).is_err());
        assert!(SeismicVolume::new(1, 1, 2, vec![0.0]).is_err());
        assert!(matches!(
            SeismicVolume::new(1, 1, 1, vec![f32::NAN]),
            Err(Error::NonFinite(0))
        ));
    }

    #[test]
    fn inline_section_shape() {
        let v = counting(2, 3, 4);
        let s = v.extract_section(SectionAxis::Inline, 0).unwrap();
        assert_eq!(s.shape(), (3, 4));
        assert_eq!(s.get(2, 3), v.get(0, 2, 3));
    }

    #[test]
    fn last_time_slice() {
        let v = counting(2, 3, 4);
        let s = v.extract_section(SectionAxis::TimeSlice, 3).unwrap();
        assert_eq!(s.shape(), (2, 3));
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(s.get(i, j), v.get(i, j, 3));
            }
        }
    }

    #[test]
    fn section_roundtrip_all_axes() {
        let v = counting(3, 4, 5);
        for axis in [SectionAxis::Inline, SectionAxis::Crossline, SectionAxis::TimeSlice] {
            let mut w = SeismicVolume::zeros(3, 4, 5).unwrap();
            for idx in 0..v.axis_len(axis) {
                let s = v.extract_section(axis, idx).unwrap();
                w.insert_section(&s).unwrap();
            }
            assert_eq!(w.amplitudes(), v.amplitudes());
        }
    }

    #[test]
    fn section_index_out_of_range() {
        let v = counting(2, 3, 4);
        assert!(matches!(
            v.extract_section(SectionAxis::Crossline, 3),
            Err(Error::OutOfRange(_))
        ));
    }
}
