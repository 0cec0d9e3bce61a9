//! Fault detection on sections: discontinuity thresholding, Hough line
//! features, false-feature pruning, connection, and section-to-section tracking.

mod connect;
mod hough;
mod prune;
mod track;

pub use connect::connect_features;
pub use hough::{extract_fault_features, hough_accumulator, HoughAccumulator, HoughParams};
pub use prune::{prune_false_features, tls_fit, PruneParams};
pub use track::{track_faults_sections, TrackParams};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::attributes::{gtc_section, AttributeVolume, GtcParams};
use crate::error::{dim, invalid, Error, Result};
use crate::volume::{SectionAxis, SeismicVolume};

/// A point in section coordinates: (row, col), col being depth for vertical sections.
pub type Point = (f64, f64);

/// A straight fault segment found by the Hough transform.
#[derive(Clone, Debug, PartialEq)]
pub struct FaultFeature {
    pub id: usize,
    /// Ordered by depth (shallow first).
    pub endpoints: [Point; 2],
    /// Line parameters of `rho = row cos(theta) + col sin(theta)`.
    pub rho: f64,
    pub theta: f64,
    pub support: usize,
}

impl FaultFeature {
    pub fn midpoint(&self) -> Point {
        let [a, b] = self.endpoints;
        ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0)
    }

    pub fn length(&self) -> f64 {
        let [a, b] = self.endpoints;
        (a.0 - b.0).hypot(a.1 - b.1)
    }
}

/// A connected fault trace and the features that formed it.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polyline {
    pub id: usize,
    pub points: Vec<Point>,
    pub features: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct FaultNetwork {
    pub polylines: Vec<Polyline>,
}

impl FaultNetwork {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    /// Text form: `POLYLINE id`, an optional `FEATURES ...` line, then one `row col` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.polylines {
            let _ = writeln!(out, "POLYLINE {}", p.id);
            if !p.features.is_empty() {
                let ids: Vec<String> = p.features.iter().map(|f| f.to_string()).collect();
                let _ = writeln!(out, "FEATURES {}", ids.join(" "));
            }
            for (r, c) in &p.points {
                let _ = writeln!(out, "{r:.3} {c:.3}");
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut net = FaultNetwork::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Format(format!("line {}: cannot parse {line:?}", lineno + 1));
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("POLYLINE") => {
                    let id = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                    net.polylines.push(Polyline {
                        id,
                        ..Default::default()
                    });
                }
                Some("FEATURES") => {
                    let p = net.polylines.last_mut().ok_or_else(bad)?;
                    for s in parts {
                        p.features.push(s.parse().map_err(|_| bad())?);
                    }
                }
                Some(first) => {
                    let r: f64 = first.parse().map_err(|_| bad())?;
                    let c: f64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                    net.polylines.last_mut().ok_or_else(bad)?.points.push((r, c));
                }
                None => {}
            }
        }
        Ok(net)
    }
}

/// A boolean image in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn new(rows: usize, cols: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(dim(format!("mask of {} pixels is not {rows}x{cols}", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![false; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.data[r * self.cols + c] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

fn check_modes(modes: &[usize]) -> Result<()> {
    if modes.is_empty() || modes.iter().any(|m| !(1..=3).contains(m)) {
        return Err(invalid("coherence modes must be a non-empty subset of 1, 2, 3"));
    }
    Ok(())
}

/// `1 - min_i E_i` of the tensor coherence over the listed modes (1-based),
/// evaluated on one section.
///
/// The time mode (3) compares lateral patterns after removing the lateral
/// mean, so on flat, noisy layering it mostly measures the noise; dropping it
/// (`modes = [1, 2]`) gives a cleaner map on noisy data.
pub fn discontinuity_map(
    volume: &SeismicVolume,
    params: &GtcParams,
    modes: &[usize],
    axis: SectionAxis,
    index: usize,
    workers: usize,
) -> Result<Vec<f64>> {
    check_modes(modes)?;
    Ok(gtc_section(volume, params, axis, index, workers)?
        .into_iter()
        .map(|e| 1.0 - modes.iter().map(|&m| e[m - 1]).fold(f64::INFINITY, f64::min))
        .collect())
}

/// Discontinuity of a precomputed coherence volume on one section.
pub fn discontinuity_from_coherence(
    coherence: &AttributeVolume,
    modes: &[usize],
    axis: SectionAxis,
    index: usize,
) -> Result<Vec<f64>> {
    check_modes(modes)?;
    let channels: Vec<Vec<f64>> = modes
        .iter()
        .map(|&m| coherence.section(m - 1, axis, index))
        .collect::<Result<_>>()?;
    Ok((0..channels[0].len())
        .map(|p| 1.0 - channels.iter().map(|c| c[p]).fold(f64::INFINITY, f64::min))
        .collect())
}

/// Nearest-rank percentile (0..=100) of a set of values.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Pixels strictly above `threshold`.
pub fn threshold_map(map: &[f64], rows: usize, cols: usize, threshold: f64) -> Result<Mask> {
    Mask::new(rows, cols, map.iter().map(|&v| v > threshold).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultParams {
    /// Coherence modes (1-based) whose minimum forms the discontinuity map.
    pub coherence_modes: Vec<usize>,
    /// Percentile of the discontinuity map used as the hard threshold.
    pub threshold_percentile: f64,
    pub hough: HoughParams,
    pub prune: PruneParams,
    /// Largest endpoint gap bridged when chaining features.
    pub d_chain: f64,
}

impl Default for FaultParams {
    fn default() -> Self {
        Self {
            coherence_modes: vec![1, 2, 3],
            threshold_percentile: 90.0,
            hough: HoughParams::default(),
            prune: PruneParams::default(),
            d_chain: 10.0,
        }
    }
}

/// Intermediate and final products of fault detection on one section.
#[derive(Clone, Debug)]
pub struct FaultDetection {
    pub threshold: f64,
    pub mask: Mask,
    pub features: Vec<FaultFeature>,
    pub pruned: Vec<FaultFeature>,
    pub network: FaultNetwork,
}

/// Threshold, extract, prune and connect on a discontinuity map.
pub fn detect_faults(map: &[f64], rows: usize, cols: usize, params: &FaultParams) -> Result<FaultDetection> {
    let threshold = percentile(map, params.threshold_percentile);
    let mask = threshold_map(map, rows, cols, threshold)?;
    let features = extract_fault_features(&mask, &params.hough)?;
    let pruned = if features.is_empty() {
        Vec::new()
    } else {
        prune_false_features(&features, &params.prune)?
    };
    let network = connect_features(&pruned, params.d_chain);
    Ok(FaultDetection {
        threshold,
        mask,
        features,
        pruned,
        network,
    })
}

/// Pixels within `tolerance` of any polyline segment.
pub fn polyline_band(network: &FaultNetwork, rows: usize, cols: usize, tolerance: f64) -> Mask {
    let mut mask = Mask::empty(rows, cols);
    for p in &network.polylines {
        for w in p.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let r_lo = (a.0.min(b.0) - tolerance).floor().max(0.0) as usize;
            let r_hi = ((a.0.max(b.0) + tolerance).ceil() as usize).min(rows - 1);
            let c_lo = (a.1.min(b.1) - tolerance).floor().max(0.0) as usize;
            let c_hi = ((a.1.max(b.1) + tolerance).ceil() as usize).min(cols - 1);
            for r in r_lo..=r_hi {
                for c in c_lo..=c_hi {
                    if segment_distance((r as f64, c as f64), a, b) <= tolerance {
                        mask.set(r, c, true);
                    }
                }
            }
        }
    }
    mask
}

/// Pixels visited when rasterizing every polyline segment.
pub fn rasterize(network: &FaultNetwork, rows: usize, cols: usize) -> Mask {
    let mut mask = Mask::empty(rows, cols);
    for p in &network.polylines {
        for w in p.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
            for k in 0..=steps {
                let t = k as f64 / steps as f64;
                let r = (a.0 + t * (b.0 - a.0)).round();
                let c = (a.1 + t * (b.1 - a.1)).round();
                if r >= 0.0 && c >= 0.0 && (r as usize) < rows && (c as usize) < cols {
                    mask.set(r as usize, c as usize, true);
                }
            }
        }
    }
    mask
}

pub(crate) fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dr, dc) = (b.0 - a.0, b.1 - a.1);
    let len2 = dr * dr + dc * dc;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dr + (p.1 - a.1) * dc) / len2).clamp(0.0, 1.0)
    };
    (p.0 - a.0 - t * dr).hypot(p.1 - a.1 - t * dc)
}

/// Pixel-level precision, recall and F1 of a network against a truth mask.
///
/// A rasterized polyline pixel is a true positive when it lies within
/// `tolerance` of a truth pixel; a truth pixel is recalled when it lies within
/// `tolerance` of a polyline.
pub fn fault_f1(network: &FaultNetwork, truth: &Mask, tolerance: f64) -> (f64, f64, f64) {
    let (rows, cols) = (truth.rows, truth.cols);
    let raster = rasterize(network, rows, cols);
    let t = tolerance.ceil() as isize;
    let near_truth = |r: usize, c: usize| {
        for dr in -t..=t {
            for dc in -t..=t {
                let (rr, cc) = (r as isize + dr, c as isize + dc);
                if rr >= 0
                    && cc >= 0
                    && (rr as usize) < rows
                    && (cc as usize) < cols
                    && ((dr * dr + dc * dc) as f64).sqrt() <= tolerance
                    && truth.get(rr as usize, cc as usize)
                {
                    return true;
                }
            }
        }
        false
    };
    let mut tp = 0usize;
    let mut n_pred = 0usize;
    for r in 0..rows {
        for c in 0..cols {
            if raster.get(r, c) {
                n_pred += 1;
                if near_truth(r, c) {
                    tp += 1;
                }
            }
        }
    }
    let band = polyline_band(network, rows, cols, tolerance);
    let n_truth = truth.count();
    let recalled = (0..rows * cols)
        .filter(|&p| truth.data[p] && band.data[p])
        .count();
    let precision = if n_pred == 0 { 0.0 } else { tp as f64 / n_pred as f64 };
    let recall = if n_truth == 0 { 0.0 } else { recalled as f64 / n_truth as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip() {
        let net = FaultNetwork {
            polylines: vec![
                Polyline {
                    id: 0,
                    points: vec![(1.5, 2.0), (3.0, 10.25)],
                    features: vec![0, 2],
                },
                Polyline {
                    id: 1,
                    points: vec![(7.0, 0.0), (7.0, 4.0)],
                    features: vec![],
                },
            ],
        };
        let text = net.to_text();
        assert!(text.starts_with("POLYLINE 0\nFEATURES 0 2\n1.500 2.000\n"));
        assert_eq!(FaultNetwork::from_text(&text).unwrap(), net);
        assert!(FaultNetwork::from_text("1 2\n").is_err());
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=10).map(|x| x as f64).collect();
        assert_eq!(percentile(&v, 90.0), 9.0);
        assert_eq!(percentile(&v, 100.0), 10.0);
        assert_eq!(percentile(&v, 0.0), 1.0);
    }

    #[test]
    fn perfect_prediction_scores_one() {
        let mut truth = Mask::empty(20, 20);
        for c in 0..20 {
            truth.set(10, c, true);
        }
        let net = FaultNetwork {
            polylines: vec![Polyline {
                id: 0,
                points: vec![(10.0, 0.0), (10.0, 19.0)],
                features: vec![0],
            }],
        };
        let (p, r, f) = fault_f1(&net, &truth, 2.0);
        assert_eq!((p, r, f), (1.0, 1.0, 1.0));
        let far = FaultNetwork {
            polylines: vec![Polyline {
                id: 0,
                points: vec![(2.0, 0.0), (2.0, 19.0)],
                features: vec![0],
            }],
        };
        assert_eq!(fault_f1(&far, &truth, 2.0).2, 0.0);
    }
}
