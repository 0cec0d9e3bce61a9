//! Line features from a binary mask by (rho, theta) accumulator voting.

use serde::{Deserialize, Serialize};

use super::{FaultFeature, Mask};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoughParams {
    /// Pixels per rho bin.
    pub rho_resolution: f64,
    /// Degrees per theta bin.
    pub theta_resolution_deg: f64,
    /// Half-width of the searched theta range around vertical, in degrees.
    pub theta_range_deg: f64,
    pub min_support: usize,
    pub max_gap: f64,
    pub min_length: f64,
}

impl Default for HoughParams {
    fn default() -> Self {
        Self {
            rho_resolution: 1.0,
            theta_resolution_deg: 1.0,
            theta_range_deg: 30.0,
            min_support: 10,
            max_gap: 3.0,
            min_length: 8.0,
        }
    }
}

impl HoughParams {
    fn validate(&self) -> Result<()> {
        if !(self.rho_resolution > 0.0) || !(self.theta_resolution_deg > 0.0) {
            return Err(invalid("Hough resolutions must be positive"));
        }
        if !(0.0..90.0).contains(&self.theta_range_deg) {
            return Err(invalid("Hough theta range must lie in [0, 90) degrees"));
        }
        if self.min_support == 0 || self.max_gap < 0.0 || self.min_length < 0.0 {
            return Err(invalid("Hough support, gap and length limits must be positive"));
        }
        Ok(())
    }

    /// Bin centers of the theta axis, in radians.
    pub fn thetas(&self) -> Vec<f64> {
        let steps = (self.theta_range_deg / self.theta_resolution_deg).floor() as isize;
        (-steps..=steps)
            .map(|k| (k as f64 * self.theta_resolution_deg).to_radians())
            .collect()
    }
}

/// Votes per (theta, rho) bin; `rho_offset` shifts rho bins to non-negative indices.
#[derive(Clone, Debug, PartialEq)]
pub struct HoughAccumulator {
    pub thetas: Vec<f64>,
    pub rho_resolution: f64,
    pub rho_offset: isize,
    pub n_rho: usize,
    pub votes: Vec<u32>,
}

impl HoughAccumulator {
    #[inline]
    pub fn rho_bin(&self, r: f64, c: f64, t: usize) -> usize {
        let theta = self.thetas[t];
        let rho = r * theta.cos() + c * theta.sin();
        ((rho / self.rho_resolution).round() as isize + self.rho_offset) as usize
    }

    pub fn rho_of(&self, bin: usize) -> f64 {
        (bin as isize - self.rho_offset) as f64 * self.rho_resolution
    }

    #[inline]
    pub fn get(&self, t: usize, rho_bin: usize) -> u32 {
        self.votes[t * self.n_rho + rho_bin]
    }

    fn vote(&mut self, r: f64, c: f64, delta: i64) {
        for t in 0..self.thetas.len() {
            let b = self.rho_bin(r, c, t);
            let cell = &mut self.votes[t * self.n_rho + b];
            *cell = (*cell as i64 + delta) as u32;
        }
    }

    /// Highest bin, first in (theta, rho) scan order on ties.
    pub fn peak(&self) -> (usize, usize, u32) {
        let mut best = (0, 0, 0);
        for t in 0..self.thetas.len() {
            for b in 0..self.n_rho {
                let v = self.votes[t * self.n_rho + b];
                if v > best.2 {
                    best = (t, b, v);
                }
            }
        }
        best
    }
}

fn empty_accumulator(mask: &Mask, params: &HoughParams) -> HoughAccumulator {
    let diag = ((mask.rows * mask.rows + mask.cols * mask.cols) as f64).sqrt();
    let rho_offset = (diag / params.rho_resolution).ceil() as isize + 1;
    let n_rho = (2 * rho_offset + 1) as usize;
    let thetas = params.thetas();
    HoughAccumulator {
        votes: vec![0; thetas.len() * n_rho],
        thetas,
        rho_resolution: params.rho_resolution,
        rho_offset,
        n_rho,
    }
}

/// Full accumulator: each set pixel votes once per theta bin.
pub fn hough_accumulator(mask: &Mask, params: &HoughParams) -> Result<HoughAccumulator> {
    params.validate()?;
    let mut acc = empty_accumulator(mask, params);
    for r in 0..mask.rows {
        for c in 0..mask.cols {
            if mask.get(r, c) {
                acc.vote(r as f64, c as f64, 1);
            }
        }
    }
    Ok(acc)
}

/// Extracts line segments from a thresholded discontinuity mask.
///
/// Peaks are taken greedily: the strongest bin wins, every mask pixel within
/// one rho bin of its line is assigned to it and withdraws all of its votes,
/// which suppresses the peak's neighbourhood before the next peak is read.
/// The assigned pixels are split into segments at gaps wider than `max_gap`.
pub fn extract_fault_features(mask: &Mask, params: &HoughParams) -> Result<Vec<FaultFeature>> {
    params.validate()?;
    let set = mask.count();
    if set == 0 {
        return Ok(Vec::new());
    }
    if set == mask.rows * mask.cols {
        return Err(Error::ThresholdTooLow(
            "every pixel of the discontinuity mask is set".into(),
        ));
    }
    let mut acc = hough_accumulator(mask, params)?;
    let mut live = mask.clone();
    let mut features = Vec::new();

    loop {
        let (t, b, votes) = acc.peak();
        if (votes as usize) < params.min_support {
            break;
        }
        let theta = acc.thetas[t];
        let rho = acc.rho_of(b);
        let (ct, st) = (theta.cos(), theta.sin());

        let mut members: Vec<(f64, usize, usize)> = Vec::new();
        for r in 0..live.rows {
            for c in 0..live.cols {
                if live.get(r, c) {
                    let d = r as f64 * ct + c as f64 * st - rho;
                    if d.abs() <= params.rho_resolution {
                        members.push((-(r as f64) * st + c as f64 * ct, r, c));
                    }
                }
            }
        }
        if members.is_empty() {
            // rounding put the peak just outside every band; drop that bin
            acc.votes[t * acc.n_rho + b] = 0;
            continue;
        }
        for &(_, r, c) in &members {
            acc.vote(r as f64, c as f64, -1);
            live.set(r, c, false);
        }
        members.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut start = 0;
        for i in 1..=members.len() {
            if i == members.len() || members[i].0 - members[i - 1].0 > params.max_gap {
                let seg = &members[start..i];
                let (t0, t1) = (seg[0].0, seg[seg.len() - 1].0);
                if seg.len() >= params.min_support && t1 - t0 >= params.min_length {
                    let at = |s: f64| {
                        let r = (rho * ct - s * st).clamp(0.0, (mask.rows - 1) as f64);
                        let c = (rho * st + s * ct).clamp(0.0, (mask.cols - 1) as f64);
                        (r, c)
                    };
                    let (mut a, mut e) = (at(t0), at(t1));
                    if (e.1, e.0) < (a.1, a.0) {
                        std::mem::swap(&mut a, &mut e);
                    }
                    features.push(FaultFeature {
                        id: features.len(),
                        endpoints: [a, e],
                        rho,
                        theta,
                        support: seg.len(),
                    });
                }
                start = i;
            }
        }
    }
    Ok(features)
}
