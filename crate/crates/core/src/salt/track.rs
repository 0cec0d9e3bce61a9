//! Boundary tracking: texture tensors stacked across reference sections,
//! per-point MPCA subspaces, and a window search in the predicted section.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BoundaryCurve;
use crate::attributes::with_workers;
use crate::error::{invalid, Error, Result};
use crate::fault::Point;
use crate::multilinear::{mpca_fit, subspace_project, Tensor3};
use crate::volume::{Section2D, SectionAxis, SeismicVolume};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaltTrackParams {
    /// Number of reference sections (odd, at least 3).
    pub n_r: usize,
    /// Patch side (odd).
    pub n_p: usize,
    /// Neighbours on each side of a point in its tensor group.
    pub n_s: usize,
    /// Half-width of the candidate search window.
    pub search: usize,
    pub reduced: [usize; 3],
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SaltTrackParams {
    fn default() -> Self {
        Self {
            n_r: 5,
            n_p: 11,
            n_s: 2,
            search: 5,
            reduced: [4, 4, 3],
            max_iter: 10,
            tol: 1e-6,
        }
    }
}

impl SaltTrackParams {
    fn validate(&self) -> Result<()> {
        if self.n_r < 3 || self.n_r.is_multiple_of(2) {
            return Err(invalid("n_r must be odd and at least 3"));
        }
        if self.n_p.is_multiple_of(2) {
            return Err(invalid("patch side n_p must be odd"));
        }
        if self.n_s == 0 {
            return Err(invalid("n_s must be at least 1"));
        }
        let dims = [self.n_p, self.n_p, self.n_r];
        if (0..3).any(|m| self.reduced[m] == 0 || self.reduced[m] > dims[m]) {
            return Err(invalid(format!(
                "reduced dims {:?} must be positive and within {dims:?}",
                self.reduced
            )));
        }
        Ok(())
    }
}

/// Texture tensors of the centre reference boundary.
#[derive(Clone, Debug)]
pub struct BoundaryTensorSet {
    pub axis: SectionAxis,
    /// Section indices of the references, ascending and consecutive.
    pub indices: Vec<usize>,
    pub n_p: usize,
    pub closed: bool,
    /// One `n_p x n_p x n_r` tensor per centre-boundary point.
    pub tensors: Vec<Tensor3>,
    /// `correspondences[m][k]`: point on reference `m` matched to centre point `k`.
    pub correspondences: Vec<Vec<Point>>,
}

impl BoundaryTensorSet {
    pub fn n_r(&self) -> usize {
        self.indices.len()
    }

    /// 1-based index of the centre reference.
    pub fn n_c(&self) -> usize {
        self.n_r().div_ceil(2)
    }

    pub fn center_points(&self) -> &[Point] {
        &self.correspondences[self.n_c() - 1]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }
}

fn arc_fractions(curve: &BoundaryCurve) -> Vec<f64> {
    let total = curve.arc_length();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(curve.points.len());
    for (i, p) in curve.points.iter().enumerate() {
        if i > 0 {
            let q = curve.points[i - 1];
            acc += (p.0 - q.0).hypot(p.1 - q.1);
        }
        out.push(if total > 0.0 { acc / total } else { 0.0 });
    }
    out
}

/// Index of the point of `fractions` nearest to fraction `f`.
fn nearest_fraction(fractions: &[f64], f: f64, closed: bool) -> usize {
    let gap = |g: f64| {
        let d = (f - g).abs();
        if closed { d.min(1.0 - d) } else { d }
    };
    let mut best = 0;
    for (i, &g) in fractions.iter().enumerate() {
        if gap(g) < gap(fractions[best]) {
            best = i;
        }
    }
    best
}

/// Stacks `n_p x n_p` patches around corresponding boundary points of
/// consecutive reference sections.
///
/// Points are matched by normalised arc length: the centre-boundary point at
/// fraction `f` of its curve pairs with the point nearest fraction `f` on each
/// other reference.
pub fn build_boundary_tensors(
    volume: &SeismicVolume,
    axis: SectionAxis,
    references: &[BoundaryCurve],
    n_p: usize,
) -> Result<BoundaryTensorSet> {
    let n_r = references.len();
    if n_r < 3 || n_r.is_multiple_of(2) {
        return Err(invalid(format!("need an odd number (>= 3) of reference boundaries, got {n_r}")));
    }
    if n_p.is_multiple_of(2) {
        return Err(invalid("patch side n_p must be odd"));
    }
    let indices: Vec<usize> = references.iter().map(|b| b.section_index).collect();
    if indices.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(invalid(format!("reference sections {indices:?} are not consecutive")));
    }
    if references.iter().any(|b| b.points.is_empty()) {
        return Err(Error::Empty("a reference boundary has no points".into()));
    }
    let center = &references[n_r / 2];
    let lengths: Vec<f64> = references.iter().map(|b| b.arc_length()).collect();
    let (lo, hi) = lengths
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &l| (lo.min(l), hi.max(l)));
    if hi > 0.0 && (lo == 0.0 || hi / lo > 2.0) {
        return Err(invalid(format!(
            "reference boundary lengths {lo:.1}..{hi:.1} differ by more than a factor of two; correspondence is unreliable"
        )));
    }
    let sections: Vec<Section2D> = indices
        .iter()
        .map(|&i| volume.extract_section(axis, i))
        .collect::<Result<_>>()?;
    let views: Vec<&Section2D> = sections.iter().collect();

    let center_f = arc_fractions(center);
    let correspondences: Vec<Vec<Point>> = references
        .iter()
        .map(|b| {
            let fr = arc_fractions(b);
            center_f
                .iter()
                .map(|&f| b.points[nearest_fraction(&fr, f, center.closed)])
                .collect()
        })
        .collect();

    let tensors = (0..center.points.len())
        .map(|k| {
            let h = (n_p / 2) as isize;
            Tensor3::from_fn((n_p, n_p, n_r), |a, b, m| {
                let p = correspondences[m][k];
                let (r0, c0) = (p.0.round() as isize, p.1.round() as isize);
                views[m].get_clamped(r0 + a as isize - h, c0 + b as isize - h) as f64
            })
        })
        .collect();

    Ok(BoundaryTensorSet {
        axis,
        indices,
        n_p,
        closed: center.closed,
        tensors,
        correspondences,
    })
}

/// 5-point moving average; wraps for closed curves and shrinks at open ends.
fn smooth(values: &[(f64, f64)], closed: bool) -> Vec<(f64, f64)> {
    let n = values.len() as isize;
    (0..n)
        .map(|i| {
            let mut acc = (0.0, 0.0);
            let mut count = 0.0;
            for j in i - 2..=i + 2 {
                let idx = if closed {
                    j.rem_euclid(n)
                } else if (0..n).contains(&j) {
                    j
                } else {
                    continue;
                };
                let v = values[idx as usize];
                acc.0 += v.0;
                acc.1 += v.1;
                count += 1.0;
            }
            (acc.0 / count, acc.1 / count)
        })
        .collect()
}

/// Tracks the boundary into the section just after (or just before) the
/// reference block.
///
/// For each centre point the tensors of its `2 n_s + 1` neighbours form a
/// group whose MPCA subspace scores candidates in a `+-search` window around
/// the matched point on the nearest reference. A candidate's tensor is the
/// point's own tensor slid by one section: the matched patches of the `n_r - 1`
/// references next to the predicted section plus the predicted patch centred
/// on the candidate. The candidate
/// closest to the projected tensor of the point itself wins; ties fall to the
/// mean distance over the group, then to the smaller offset. Offsets are
/// smoothed along the curve before being applied.
pub fn track_salt_boundary(
    volume: &SeismicVolume,
    set: &BoundaryTensorSet,
    params: &SaltTrackParams,
    predicted: usize,
    workers: usize,
) -> Result<BoundaryCurve> {
    params.validate()?;
    if set.n_p != params.n_p {
        return Err(invalid(format!(
            "tensor set was built with n_p = {}, params say {}",
            set.n_p, params.n_p
        )));
    }
    if set.is_empty() {
        return Err(Error::Empty("tensor set holds no boundary points".into()));
    }
    let n_r = set.n_r();
    let len = volume.axis_len(set.axis);
    if predicted >= len {
        return Err(Error::OutOfRange(format!("predicted {} {predicted} outside 0..{len}", set.axis)));
    }
    let (first, last) = (set.indices[0], set.indices[n_r - 1]);
    // the candidate stack reuses the matched reference patches and swaps the
    // predicted patch in at the far end
    let (kept_refs, pred_slot, nearest): (Vec<usize>, usize, usize) = if predicted == last + 1 {
        ((1..n_r).collect(), n_r - 1, n_r - 1)
    } else if predicted + 1 == first {
        ((0..n_r - 1).collect(), 0, 0)
    } else {
        return Err(invalid(format!(
            "predicted section {predicted} is not adjacent to references {first}..={last}"
        )));
    };
    let starts = &set.correspondences[nearest];
    let target = volume.extract_section(set.axis, predicted)?;
    let ref_sections: Vec<Section2D> = kept_refs
        .iter()
        .map(|&m| volume.extract_section(set.axis, set.indices[m]))
        .collect::<Result<_>>()?;
    let (rows, cols) = target.shape();
    let s = params.search as f64;
    for p in starts {
        let (r, c) = (p.0.round(), p.1.round());
        if r - s < 0.0 || c - s < 0.0 || r + s > (rows - 1) as f64 || c + s > (cols - 1) as f64 {
            return Err(Error::OutOfRange(format!(
                "search window around ({r}, {c}) leaves the {rows}x{cols} section"
            )));
        }
    }

    let k_total = set.len() as isize;
    let reduced = (params.reduced[0], params.reduced[1], params.reduced[2]);
    let search = params.search as isize;
    let mut offsets: Vec<(isize, isize)> = Vec::with_capacity(((2 * search + 1) * (2 * search + 1)) as usize);
    for dr in -search..=search {
        for dc in -search..=search {
            offsets.push((dr, dc));
        }
    }
    offsets.sort_by_key(|&(dr, dc)| (dr * dr + dc * dc, dr, dc));

    let results: Vec<Result<((isize, isize), bool)>> = with_workers(workers, || {
        (0..k_total)
            .into_par_iter()
            .map(|k| {
                let members: Vec<Tensor3> = (k - params.n_s as isize..=k + params.n_s as isize)
                    .map(|j| {
                        let idx = if set.closed { j.rem_euclid(k_total) } else { j.clamp(0, k_total - 1) };
                        set.tensors[idx as usize].clone()
                    })
                    .collect();
                let fit = mpca_fit(&members, reduced, params.max_iter, params.tol)?;
                let projected: Vec<Tensor3> = members
                    .iter()
                    .map(|m| subspace_project(m, &fit.basis))
                    .collect::<Result<_>>()?;
                let own = &projected[params.n_s];
                let start = starts[k as usize];
                let h = (params.n_p / 2) as isize;
                let mut cand = Tensor3::zeros((params.n_p, params.n_p, n_r));
                for (slot_refs, &m) in kept_refs.iter().enumerate() {
                    let slot = if pred_slot == 0 { slot_refs + 1 } else { slot_refs };
                    let p = set.correspondences[m][k as usize];
                    let (r0, c0) = (p.0.round() as isize, p.1.round() as isize);
                    for a in 0..params.n_p {
                        for b in 0..params.n_p {
                            let v = ref_sections[slot_refs].get_clamped(r0 + a as isize - h, c0 + b as isize - h);
                            cand.set(a, b, slot, v as f64);
                        }
                    }
                }
                let mut best: Option<((f64, f64), (isize, isize))> = None;
                for &(dr, dc) in &offsets {
                    let (r0, c0) = (start.0.round() as isize + dr, start.1.round() as isize + dc);
                    for a in 0..params.n_p {
                        for b in 0..params.n_p {
                            let v = target.get_clamped(r0 + a as isize - h, c0 + b as isize - h);
                            cand.set(a, b, pred_slot, v as f64);
                        }
                    }
                    let z = subspace_project(&cand, &fit.basis)?;
                    let d_own = z.distance(own);
                    if best.is_some_and(|(b, _)| d_own > b.0) {
                        continue;
                    }
                    let d_mean = projected.iter().map(|y| z.distance(y)).sum::<f64>() / projected.len() as f64;
                    let better = match best {
                        None => true,
                        Some((b, _)) => d_own < b.0 || (d_own == b.0 && d_mean < b.1),
                    };
                    if better {
                        best = Some(((d_own, d_mean), (dr, dc)));
                    }
                }
                Ok((best.expect("window is never empty").1, fit.degenerate))
            })
            .collect()
    });

    let mut disp = Vec::with_capacity(results.len());
    let mut degenerate = 0usize;
    for r in results {
        let ((dr, dc), deg) = r?;
        disp.push((dr as f64, dc as f64));
        degenerate += deg as usize;
    }
    if 2 * degenerate > disp.len() {
        return Err(Error::Degenerate(format!(
            "{degenerate} of {} boundary points have no texture variance to learn from",
            disp.len()
        )));
    }
    let disp = smooth(&disp, set.closed);
    let points = starts
        .iter()
        .zip(&disp)
        .map(|(p, d)| {
            (
                (p.0 + d.0).clamp(0.0, (rows - 1) as f64),
                (p.1 + d.1).clamp(0.0, (cols - 1) as f64),
            )
        })
        .collect();
    Ok(BoundaryCurve {
        points,
        closed: set.closed,
        section_index: predicted,
    })
}

/// Tracks `count` sections away from the reference block, sliding the block
/// by one section after every step so each prediction uses the most recent
/// boundaries.
pub fn track_salt_sequence(
    volume: &SeismicVolume,
    axis: SectionAxis,
    references: &[BoundaryCurve],
    count: usize,
    backward: bool,
    params: &SaltTrackParams,
    workers: usize,
) -> Result<Vec<BoundaryCurve>> {
    params.validate()?;
    if references.len() != params.n_r {
        return Err(invalid(format!(
            "expected {} reference boundaries, got {}",
            params.n_r,
            references.len()
        )));
    }
    let mut block: Vec<BoundaryCurve> = references.to_vec();
    block.sort_by_key(|b| b.section_index);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let set = build_boundary_tensors(volume, axis, &block, params.n_p)?;
        let target = if backward {
            block[0]
                .section_index
                .checked_sub(1)
                .ok_or_else(|| Error::OutOfRange(format!("no {axis} before 0")))?
        } else {
            block[block.len() - 1].section_index + 1
        };
        let tracked = track_salt_boundary(volume, &set, params, target, workers)?;
        if backward {
            block.pop();
            block.insert(0, tracked.clone());
        } else {
            block.remove(0);
            block.push(tracked.clone());
        }
        out.push(tracked);
    }
    Ok(out)
}
