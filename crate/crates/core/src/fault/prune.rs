//! Removal of isolated features and merging of neighbouring duplicates.

use log::warn;
use serde::{Deserialize, Serialize};

use super::{FaultFeature, Point};
use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruneParams {
    /// Absolute outlier distance; when unset, twice the median midpoint distance is used.
    pub d_out: Option<f64>,
    /// Lower bound on the adaptive outlier distance, in pixels.
    pub d_out_floor: f64,
    pub d_merge: f64,
    pub theta_merge_deg: f64,
}

impl Default for PruneParams {
    fn default() -> Self {
        Self {
            d_out: None,
            d_out_floor: 2.0,
            d_merge: 5.0,
            theta_merge_deg: 5.0,
        }
    }
}

/// Total-least-squares line through points: (centroid, unit normal).
pub fn tls_fit(points: &[Point]) -> (Point, (f64, f64)) {
    let n = points.len() as f64;
    let (mr, mc) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let (mut srr, mut scc, mut src) = (0.0, 0.0, 0.0);
    for p in points {
        let (dr, dc) = (p.0 - mr, p.1 - mc);
        srr += dr * dr;
        scc += dc * dc;
        src += dr * dc;
    }
    // direction of largest spread; the normal is perpendicular to it
    let angle = 0.5 * (2.0 * src).atan2(srr - scc);
    let dir = (angle.cos(), angle.sin());
    ((mr, mc), (-dir.1, dir.0))
}

/// Perpendicular distance of each point to the TLS line through all of them.
#[cfg(test)]
fn tls_distances(points: &[Point]) -> Vec<f64> {
    if points.len() < 2 {
        return vec![0.0; points.len()];
    }
    let (c, nrm) = tls_fit(points);
    points
        .iter()
        .map(|p| ((p.0 - c.0) * nrm.0 + (p.1 - c.1) * nrm.1).abs())
        .collect()
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub(crate) fn outlier_limit(distances: &[f64], params: &PruneParams) -> f64 {
    params
        .d_out
        .unwrap_or_else(|| (2.0 * median(distances)).max(params.d_out_floor))
}

/// Distance of each point to the TLS line through all the other points.
pub(crate) fn loo_distances(points: &[Point]) -> Vec<f64> {
    if points.len() < 3 {
        return vec![0.0; points.len()];
    }
    (0..points.len())
        .map(|i| {
            let rest: Vec<Point> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &p)| p)
                .collect();
            let (c, nrm) = tls_fit(&rest);
            let p = points[i];
            ((p.0 - c.0) * nrm.0 + (p.1 - c.1) * nrm.1).abs()
        })
        .collect()
}

/// The point farthest from the line fitted through the others, if it lies
/// beyond the outlier limit.
pub(crate) fn worst_outlier(points: &[Point], params: &PruneParams) -> Option<usize> {
    let d = loo_distances(points);
    let limit = outlier_limit(&d, params);
    let (i, &worst) = d
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))?;
    (worst > limit).then_some(i)
}

fn merge(a: &FaultFeature, b: &FaultFeature) -> FaultFeature {
    let (wa, wb) = (a.support as f64, b.support as f64);
    let w = wa + wb;
    let avg = |x: f64, y: f64| (x * wa + y * wb) / w;
    let mut endpoints = [
        (avg(a.endpoints[0].0, b.endpoints[0].0), avg(a.endpoints[0].1, b.endpoints[0].1)),
        (avg(a.endpoints[1].0, b.endpoints[1].0), avg(a.endpoints[1].1, b.endpoints[1].1)),
    ];
    if endpoints[1].1 < endpoints[0].1 {
        endpoints.swap(0, 1);
    }
    FaultFeature {
        id: a.id.min(b.id),
        endpoints,
        rho: avg(a.rho, b.rho),
        theta: avg(a.theta, b.theta),
        support: a.support + b.support,
    }
}

/// Drops the feature whose midpoint lies farthest from the line fitted through
/// the other midpoints when it exceeds the outlier distance, then merges close,
/// similarly oriented features. Both steps repeat until nothing changes, so the
/// result is a fixed point.
pub fn prune_false_features(features: &[FaultFeature], params: &PruneParams) -> Result<Vec<FaultFeature>> {
    if features.is_empty() {
        return Err(invalid("pruning needs at least one feature"));
    }
    if params.d_merge < 0.0 || params.theta_merge_deg < 0.0 || params.d_out.is_some_and(|d| d < 0.0) {
        return Err(invalid("pruning distances must be non-negative"));
    }
    let theta_merge = params.theta_merge_deg.to_radians();
    let mut current: Vec<FaultFeature> = features.to_vec();
    loop {
        let mids: Vec<Point> = current.iter().map(|f| f.midpoint()).collect();
        let worst = worst_outlier(&mids, params);
        let removed = worst.is_some();
        let mut kept = current;
        if let Some(i) = worst {
            kept.remove(i);
        }

        let mut merged_any = false;
        'search: loop {
            for i in 0..kept.len() {
                for j in (i + 1)..kept.len() {
                    let (mi, mj) = (kept[i].midpoint(), kept[j].midpoint());
                    let close = (mi.0 - mj.0).hypot(mi.1 - mj.1) <= params.d_merge;
                    if close && (kept[i].theta - kept[j].theta).abs() < theta_merge {
                        let m = merge(&kept[i], &kept[j]);
                        kept.remove(j);
                        kept[i] = m;
                        merged_any = true;
                        continue 'search;
                    }
                }
            }
            break;
        }

        current = kept;
        if current.is_empty() {
            warn!("all {} fault features were pruned", features.len());
            return Ok(current);
        }
        if !removed && !merged_any {
            return Ok(current);
        }
    }
}
