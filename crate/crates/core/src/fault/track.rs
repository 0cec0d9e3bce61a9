//! Carrying fault networks from reference sections to predicted sections by
//! block matching.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::prune::{median, outlier_limit, PruneParams};
use super::{FaultNetwork, Point, Polyline};
use crate::error::{invalid, Error, Result};
use crate::volume::{Section2D, SectionAxis, SeismicVolume};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackParams {
    /// Odd block side used for the sum of absolute differences.
    pub block: usize,
    /// Displacements up to `search` pixels along each section axis are tried.
    pub search: usize,
    /// Furthest reference section (in section indices) that may be used.
    pub max_ref_distance: usize,
    pub prune: PruneParams,
}

impl Default for TrackParams {
    fn default() -> Self {
        Self {
            block: 9,
            search: 4,
            max_ref_distance: 5,
            prune: PruneParams::default(),
        }
    }
}

fn sad(reference: &Section2D, predicted: &Section2D, p: (isize, isize), d: (isize, isize), h: isize) -> f64 {
    let mut acc = 0.0;
    for a in -h..=h {
        for b in -h..=h {
            let x = reference.get_clamped(p.0 + a, p.1 + b) as f64;
            let y = predicted.get_clamped(p.0 + d.0 + a, p.1 + d.1 + b) as f64;
            acc += (x - y).abs();
        }
    }
    acc
}

/// Best displacement of the block around `p`; ties go to the smallest shift.
fn best_displacement(reference: &Section2D, predicted: &Section2D, p: Point, params: &TrackParams) -> (isize, isize) {
    let s = params.search as isize;
    let h = (params.block / 2) as isize;
    let centre = (p.0.round() as isize, p.1.round() as isize);
    let mut best = ((0, 0), f64::INFINITY);
    let mut shifts: Vec<(isize, isize)> = Vec::with_capacity(((2 * s + 1) * (2 * s + 1)) as usize);
    for dr in -s..=s {
        for dc in -s..=s {
            shifts.push((dr, dc));
        }
    }
    shifts.sort_by_key(|&(dr, dc)| (dr * dr + dc * dc, dr.abs() + dc.abs(), dr, dc));
    for d in shifts {
        let cost = sad(reference, predicted, centre, d, h);
        if cost < best.1 {
            best = (d, cost);
        }
    }
    best.0
}

/// Replaces displacement vectors that stray from the median displacement by
/// more than the pruning outlier distance with that median.
fn regularize(disp: &mut [(f64, f64)], prune: &PruneParams) {
    if disp.len() < 2 {
        return;
    }
    let rows: Vec<f64> = disp.iter().map(|d| d.0).collect();
    let cols: Vec<f64> = disp.iter().map(|d| d.1).collect();
    let m = (median(&rows), median(&cols));
    let dist: Vec<f64> = disp.iter().map(|d| (d.0 - m.0).hypot(d.1 - m.1)).collect();
    let limit = outlier_limit(&dist, prune);
    for (d, &x) in disp.iter_mut().zip(&dist) {
        if x > limit {
            *d = m;
        }
    }
}

fn track_polyline(reference: &Section2D, predicted: &Section2D, poly: &Polyline, params: &TrackParams) -> Polyline {
    let mut disp: Vec<(f64, f64)> = poly
        .points
        .iter()
        .map(|&p| {
            let d = best_displacement(reference, predicted, p, params);
            (d.0 as f64, d.1 as f64)
        })
        .collect();
    regularize(&mut disp, &params.prune);
    let (rows, cols) = predicted.shape();
    let mut points: Vec<Point> = Vec::with_capacity(poly.points.len());
    for (p, d) in poly.points.iter().zip(&disp) {
        let q = (
            (p.0 + d.0).clamp(0.0, (rows - 1) as f64),
            (p.1 + d.1).clamp(0.0, (cols - 1) as f64),
        );
        if points.last().is_none_or(|last: &Point| q.1 > last.1) {
            points.push(q);
        }
    }
    Polyline {
        id: poly.id,
        points,
        features: poly.features.clone(),
    }
}

/// Labels predicted sections from the nearest reference network.
pub fn track_faults_sections(
    volume: &SeismicVolume,
    axis: SectionAxis,
    references: &BTreeMap<usize, FaultNetwork>,
    predicted: &[usize],
    params: &TrackParams,
) -> Result<BTreeMap<usize, FaultNetwork>> {
    if params.block.is_multiple_of(2) || params.block == 0 {
        return Err(invalid("tracking block side must be odd"));
    }
    if references.is_empty() {
        return Err(invalid("tracking needs at least one reference section"));
    }
    let len = volume.axis_len(axis);
    let mut out = BTreeMap::new();
    for &p in predicted {
        if p >= len {
            return Err(Error::OutOfRange(format!("predicted {axis} {p} outside 0..{len}")));
        }
        let (&r, network) = references
            .iter()
            .min_by_key(|(&r, _)| (r.abs_diff(p), r))
            .expect("non-empty references");
        if r.abs_diff(p) > params.max_ref_distance {
            return Err(invalid(format!(
                "no reference within {} sections of {axis} {p} (nearest is {r})",
                params.max_ref_distance
            )));
        }
        let reference = volume.extract_section(axis, r)?;
        let target = volume.extract_section(axis, p)?;
        let polylines = network
            .polylines
            .iter()
            .map(|poly| track_polyline(&reference, &target, poly, params))
            .collect();
        out.insert(p, FaultNetwork { polylines });
    }
    Ok(out)
}
