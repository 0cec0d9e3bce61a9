use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::BoundaryCurve;
use crate::error::{dim, invalid, Error, Result};
use crate::fault::{Mask, Point};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DelineateParams {
    /// Threshold as a fraction of the largest GoT value in the section.
    pub theta_rel: f64,
}

impl Default for DelineateParams {
    fn default() -> Self {
        Self { theta_rel: 0.5 }
    }
}

// clockwise with rows growing downward: N, NE, E, SE, S, SW, W, NW
const RING: [(isize, isize); 8] = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)];

fn fg(mask: &Mask, r: isize, c: isize) -> bool {
    r >= 0 && c >= 0 && (r as usize) < mask.rows && (c as usize) < mask.cols && mask.get(r as usize, c as usize)
}

/// 3x3 dilation followed by 3x3 erosion; neighbours outside the grid are ignored.
pub fn closing(mask: &Mask) -> Mask {
    let (rows, cols) = (mask.rows, mask.cols);
    let mut dilated = Mask::empty(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let hit = (-1..=1).any(|dr| (-1..=1).any(|dc| fg(mask, r as isize + dr, c as isize + dc)));
            dilated.set(r, c, hit);
        }
    }
    let mut out = Mask::empty(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let keep = (-1..=1).all(|dr| {
                (-1..=1).all(|dc| {
                    let (rr, cc) = (r as isize + dr, c as isize + dc);
                    let inside = rr >= 0 && cc >= 0 && (rr as usize) < rows && (cc as usize) < cols;
                    !inside || dilated.get(rr as usize, cc as usize)
                })
            });
            out.set(r, c, keep);
        }
    }
    out
}

/// Largest 8-connected component; the earliest in raster order wins ties.
pub fn largest_component(mask: &Mask) -> Option<Mask> {
    let (rows, cols) = (mask.rows, mask.cols);
    let mut label = vec![usize::MAX; rows * cols];
    let mut best: Option<(usize, usize)> = None;
    let mut queue = VecDeque::new();
    let mut next = 0;
    for start in 0..rows * cols {
        if !mask.data[start] || label[start] != usize::MAX {
            continue;
        }
        label[start] = next;
        queue.push_back(start);
        let mut size = 0;
        while let Some(p) = queue.pop_front() {
            size += 1;
            let (r, c) = ((p / cols) as isize, (p % cols) as isize);
            for (dr, dc) in RING {
                let (rr, cc) = (r + dr, c + dc);
                if fg(mask, rr, cc) {
                    let q = rr as usize * cols + cc as usize;
                    if label[q] == usize::MAX {
                        label[q] = next;
                        queue.push_back(q);
                    }
                }
            }
        }
        if best.is_none_or(|(_, s)| size > s) {
            best = Some((next, size));
        }
        next += 1;
    }
    let (id, _) = best?;
    Some(Mask {
        rows,
        cols,
        data: label.iter().map(|&l| l == id).collect(),
    })
}

/// Outer contour of a single component by Moore-neighbour tracing.
///
/// Tracing starts at the first set pixel in raster order and stops when the
/// start pixel is left for the second time in the same direction. Pixels the
/// tracer visits twice (one-pixel necks) are cut back to their first visit so
/// the returned curve does not touch itself.
pub fn trace_contour(component: &Mask, section_index: usize) -> BoundaryCurve {
    let Some(start) = component.data.iter().position(|&b| b) else {
        return BoundaryCurve {
            points: Vec::new(),
            closed: false,
            section_index,
        };
    };
    let s = ((start / component.cols) as isize, (start % component.cols) as isize);
    let mut path = vec![s];
    let mut p = s;
    let mut back = 6usize;
    let mut first: Option<(isize, isize)> = None;
    let limit = 4 * component.rows * component.cols + 8;
    for _ in 0..limit {
        let step = (1..=8).find_map(|k| {
            let d = (back + k) % 8;
            let q = (p.0 + RING[d].0, p.1 + RING[d].1);
            fg(component, q.0, q.1).then_some((k, q))
        });
        let Some((k, q)) = step else { break };
        if p == s && first == Some(q) {
            break;
        }
        first.get_or_insert(q);
        let prev_dir = (back + k - 1) % 8;
        let prev = (p.0 + RING[prev_dir].0, p.1 + RING[prev_dir].1);
        let offset = (prev.0 - q.0, prev.1 - q.1);
        back = RING.iter().position(|&d| d == offset).expect("ring neighbours are adjacent");
        p = q;
        path.push(p);
    }
    if path.len() > 1 && path.last() == Some(&s) {
        path.pop();
    }

    let mut kept: Vec<(isize, isize)> = Vec::with_capacity(path.len());
    let mut at: HashMap<(isize, isize), usize> = HashMap::new();
    for q in path {
        if let Some(&i) = at.get(&q) {
            for dropped in kept.drain(i + 1..) {
                at.remove(&dropped);
            }
        } else {
            at.insert(q, kept.len());
            kept.push(q);
        }
    }
    let points: Vec<Point> = kept.iter().map(|&(r, c)| (r as f64, c as f64)).collect();
    BoundaryCurve {
        closed: points.len() >= 3,
        points,
        section_index,
    }
}

/// Thresholds a GoT map and traces the outline of its largest closed region.
pub fn delineate_salt_boundary(
    got_map: &[f64],
    rows: usize,
    cols: usize,
    params: &DelineateParams,
    section_index: usize,
) -> Result<BoundaryCurve> {
    if !(params.theta_rel > 0.0 && params.theta_rel <= 1.0) {
        return Err(invalid("theta_rel must lie in (0, 1]"));
    }
    if got_map.len() != rows * cols {
        return Err(dim(format!("GoT map of {} values is not {rows}x{cols}", got_map.len())));
    }
    if let Some(i) = got_map.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let max = got_map.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = got_map.iter().copied().fold(f64::INFINITY, f64::min);
    if max - min <= 1e-12 * max.abs().max(1.0) {
        return Err(Error::Empty("GoT map is uniform; no region stands out".into()));
    }
    let t = params.theta_rel * max;
    let mask = Mask::new(rows, cols, got_map.iter().map(|&v| v >= t).collect())?;
    let comp = largest_component(&closing(&mask)).ok_or_else(|| Error::Empty("no pixel above threshold".into()))?;
    let touches = |cond: &dyn Fn(usize, usize) -> bool| {
        (0..rows).any(|r| (0..cols).any(|c| cond(r, c) && comp.get(r, c)))
    };
    let all_borders = touches(&|r, _| r == 0)
        && touches(&|r, _| r == rows - 1)
        && touches(&|_, c| c == 0)
        && touches(&|_, c| c == cols - 1);
    if all_borders {
        return Err(Error::ThresholdTooLow(
            "salt region touches all four section borders".into(),
        ));
    }
    Ok(trace_contour(&comp, section_index))
}
