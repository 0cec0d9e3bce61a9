//! Salt-dome boundaries: delineation from a GoT map and section-to-section
//! tracking with tensor subspaces.

mod delineate;
mod track;

pub use delineate::{
    closing, delineate_salt_boundary, largest_component, trace_contour, DelineateParams,
};
pub use track::{
    build_boundary_tensors, track_salt_boundary, track_salt_sequence, BoundaryTensorSet,
    SaltTrackParams,
};

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fault::{Mask, Point};

/// An ordered boundary in one section.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCurve {
    pub points: Vec<Point>,
    pub closed: bool,
    pub section_index: usize,
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (d1, d2) = (cross(c, d, a), cross(c, d, b));
    let (d3, d4) = (cross(a, b, c), cross(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d))
        || (d2 == 0.0 && on_segment(b, c, d))
        || (d3 == 0.0 && on_segment(c, a, b))
        || (d4 == 0.0 && on_segment(d, a, b))
}

impl BoundaryCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Segments between consecutive points, including the closing one.
    pub fn segments(&self) -> Vec<(Point, Point)> {
        let n = self.points.len();
        let mut segs: Vec<(Point, Point)> = self.points.windows(2).map(|w| (w[0], w[1])).collect();
        if self.closed && n > 2 {
            segs.push((self.points[n - 1], self.points[0]));
        }
        segs
    }

    /// Total length, including the closing segment of a closed curve.
    pub fn arc_length(&self) -> f64 {
        self.segments()
            .iter()
            .map(|(a, b)| (a.0 - b.0).hypot(a.1 - b.1))
            .sum()
    }

    /// True when no two non-adjacent segments touch.
    pub fn is_simple(&self) -> bool {
        let segs = self.segments();
        let n = segs.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (self.closed && i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                let (a, b) = segs[i];
                let (c, d) = segs[j];
                if segments_intersect(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        if self.closed && self.points.len() < 3 {
            return Err(Error::Format("a closed boundary needs at least three points".into()));
        }
        let inside = |p: &Point| p.0 >= 0.0 && p.1 >= 0.0 && p.0 <= (rows - 1) as f64 && p.1 <= (cols - 1) as f64;
        if !self.points.iter().all(inside) {
            return Err(Error::OutOfRange(format!("boundary point outside {rows}x{cols} section")));
        }
        if !self.is_simple() {
            return Err(Error::Format("boundary intersects itself".into()));
        }
        Ok(())
    }

    /// Text form shared with fault polylines, plus a `CLOSED` line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "POLYLINE {}", self.section_index);
        if self.closed {
            out.push_str("CLOSED\n");
        }
        for (r, c) in &self.points {
            let _ = writeln!(out, "{r:.3} {c:.3}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut curve: Option<BoundaryCurve> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Format(format!("line {}: cannot parse {line:?}", lineno + 1));
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("POLYLINE") => {
                    if curve.is_some() {
                        return Err(Error::Format(format!(
                            "line {}: a boundary file holds a single curve",
                            lineno + 1
                        )));
                    }
                    let section_index = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                    curve = Some(BoundaryCurve {
                        points: Vec::new(),
                        closed: false,
                        section_index,
                    });
                }
                Some("CLOSED") => curve.as_mut().ok_or_else(bad)?.closed = true,
                Some(first) => {
                    let r: f64 = first.parse().map_err(|_| bad())?;
                    let c: f64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                    curve.as_mut().ok_or_else(bad)?.points.push((r, c));
                }
                None => {}
            }
        }
        curve.ok_or_else(|| Error::Format("no POLYLINE header".into()))
    }
}

/// Mean over the points of `a` of the distance to the nearest segment of `b`.
pub fn boundary_mean_distance(a: &BoundaryCurve, b: &BoundaryCurve) -> f64 {
    if a.points.is_empty() || b.points.is_empty() {
        return f64::INFINITY;
    }
    let segs = b.segments();
    let nearest = |p: Point| {
        if segs.is_empty() {
            let q = b.points[0];
            return (p.0 - q.0).hypot(p.1 - q.1);
        }
        segs.iter()
            .map(|&(s, e)| crate::fault::segment_distance(p, s, e))
            .fold(f64::INFINITY, f64::min)
    };
    a.points.iter().map(|&p| nearest(p)).sum::<f64>() / a.points.len() as f64
}

/// Closed outer contour of the labelled region in a section label grid.
pub fn boundary_from_labels(labels: &[u8], rows: usize, cols: usize, class: u8, section_index: usize) -> Result<BoundaryCurve> {
    let mask = Mask::new(rows, cols, labels.iter().map(|&l| l == class).collect())?;
    let comp = largest_component(&mask).ok_or_else(|| Error::Empty(format!("no pixels of class {class}")))?;
    Ok(trace_contour(&comp, section_index))
}
