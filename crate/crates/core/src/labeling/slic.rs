//! SLIC superpixels for grayscale sections, clustering in (amplitude,
//! x-gradient, y-gradient, row, col).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::volume::Section2D;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlicParams {
    pub n_segments: usize,
    /// Weight of the spatial distance, in standardized feature units per grid step.
    pub compactness: f64,
    pub iterations: usize,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self {
            n_segments: 64,
            compactness: 3.0,
            iterations: 10,
        }
    }
}

/// Per-pixel segment ids of one section.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperpixelMap {
    pub rows: usize,
    pub cols: usize,
    /// Row-major ids, dense in `0..segment_count`.
    pub labels: Vec<usize>,
    pub segment_count: usize,
    /// Sorted 4-neighbour ids of each segment.
    pub adjacency: Vec<Vec<usize>>,
}

impl SuperpixelMap {
    /// Builds the map from raw ids, renumbering them densely in raster order.
    pub fn from_labels(rows: usize, cols: usize, raw: &[usize]) -> Self {
        let mut remap = std::collections::HashMap::new();
        let labels: Vec<usize> = raw
            .iter()
            .map(|&l| {
                let next = remap.len();
                *remap.entry(l).or_insert(next)
            })
            .collect();
        let segment_count = remap.len();
        let mut adjacency = vec![Vec::new(); segment_count];
        for r in 0..rows {
            for c in 0..cols {
                let a = labels[r * cols + c];
                let mut link = |b: usize| {
                    if a != b {
                        adjacency[a].push(b);
                        adjacency[b].push(a);
                    }
                };
                if c + 1 < cols {
                    link(labels[r * cols + c + 1]);
                }
                if r + 1 < rows {
                    link(labels[(r + 1) * cols + c]);
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Self {
            rows,
            cols,
            labels,
            segment_count,
            adjacency,
        }
    }

    pub fn label(&self, r: usize, c: usize) -> usize {
        self.labels[r * self.cols + c]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.segment_count];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Inclusive `(row_min, row_max, col_min, col_max)` per segment.
    pub fn bounding_boxes(&self) -> Vec<(usize, usize, usize, usize)> {
        let mut boxes = vec![(usize::MAX, 0, usize::MAX, 0); self.segment_count];
        for r in 0..self.rows {
            for c in 0..self.cols {
                let b = &mut boxes[self.label(r, c)];
                b.0 = b.0.min(r);
                b.1 = b.1.max(r);
                b.2 = b.2.min(c);
                b.3 = b.3.max(c);
            }
        }
        boxes
    }

    /// 4-connected pieces as `(id, pixel indices)`, in raster order of first pixel.
    fn components(&self) -> Vec<(usize, Vec<usize>)> {
        let mut seen = vec![false; self.labels.len()];
        let mut out = Vec::new();
        for start in 0..self.labels.len() {
            if seen[start] {
                continue;
            }
            let id = self.labels[start];
            seen[start] = true;
            let mut pixels = vec![start];
            let mut head = 0;
            while head < pixels.len() {
                let p = pixels[head];
                head += 1;
                let (r, c) = (p / self.cols, p % self.cols);
                let mut push = |q: usize| {
                    if !seen[q] && self.labels[q] == id {
                        seen[q] = true;
                        pixels.push(q);
                    }
                };
                if r > 0 {
                    push(p - self.cols);
                }
                if r + 1 < self.rows {
                    push(p + self.cols);
                }
                if c > 0 {
                    push(p - 1);
                }
                if c + 1 < self.cols {
                    push(p + 1);
                }
            }
            out.push((id, pixels));
        }
        out
    }

    /// True when every segment is a single 4-connected piece.
    pub fn is_connected(&self) -> bool {
        self.components().len() == self.segment_count
    }
}

fn standardized(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let scale = mean.abs().max(1.0);
    if var.sqrt() <= 1e-12 * scale {
        // no signal in this channel
        return vec![0.0; v.len()];
    }
    let sd = var.sqrt();
    v.iter_mut().for_each(|x| *x = (*x - mean) / sd);
    v
}

/// Grid of at most `n` cells whose aspect follows the section.
fn seed_grid(rows: usize, cols: usize, n: usize) -> (usize, usize) {
    let s = ((rows * cols) as f64 / n as f64).sqrt();
    let mut gr = ((rows as f64 / s).round() as usize).clamp(1, rows);
    let mut gc = ((cols as f64 / s).round() as usize).clamp(1, cols);
    while gr * gc > n {
        if gr * cols >= gc * rows && gr > 1 {
            gr -= 1;
        } else if gc > 1 {
            gc -= 1;
        } else {
            gr -= 1;
        }
    }
    (gr, gc)
}

/// Moves a grid seed to the flattest pixel of its 3×3 neighbourhood so that
/// no centre starts on an edge. Ties keep the grid position. Returns the
/// seed pixel and the centre's coordinates.
fn lowest_gradient_near(grad2: &[f64], rows: usize, cols: usize, r: f64, c: f64) -> (usize, f64, f64) {
    let (r0, c0) = ((r.round() as usize).min(rows - 1), (c.round() as usize).min(cols - 1));
    let mut best = (r0, c0, grad2[r0 * cols + c0]);
    for rr in r0.saturating_sub(1)..=(r0 + 1).min(rows - 1) {
        for cc in c0.saturating_sub(1)..=(c0 + 1).min(cols - 1) {
            let g = grad2[rr * cols + cc];
            if g < best.2 {
                best = (rr, cc, g);
            }
        }
    }
    if (best.0, best.1) == (r0, c0) {
        (r0 * cols + c0, r, c)
    } else {
        (best.0 * cols + best.1, best.0 as f64, best.1 as f64)
    }
}

/// Over-segments a section with SLIC on amplitude and central-difference
/// gradients, each standardized, then merges disconnected pieces into their
/// largest neighbouring segment.
pub fn oversegment_slic_gray(section: &Section2D, params: &SlicParams) -> Result<SuperpixelMap> {
    let (rows, cols) = section.shape();
    let n = rows * cols;
    if params.n_segments == 0 || params.n_segments > n {
        return Err(invalid(format!(
            "cannot cut {n} pixels into {} segments",
            params.n_segments
        )));
    }
    if !(params.compactness >= 0.0) {
        return Err(invalid("compactness must be nonnegative"));
    }
    let v = section.to_f64();
    let at = |r: isize, c: isize| v[(r.clamp(0, rows as isize - 1) as usize) * cols + c.clamp(0, cols as isize - 1) as usize];
    let mut gx = Vec::with_capacity(n);
    let mut gy = Vec::with_capacity(n);
    for r in 0..rows as isize {
        for c in 0..cols as isize {
            gx.push(0.5 * (at(r, c + 1) - at(r, c - 1)));
            gy.push(0.5 * (at(r + 1, c) - at(r - 1, c)));
        }
    }
    let grad2: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a * a + b * b).collect();
    let feats = [standardized(v.clone()), standardized(gx), standardized(gy)];

    let (gr, gc) = seed_grid(rows, cols, params.n_segments);
    let step_r = rows as f64 / gr as f64;
    let step_c = cols as f64 / gc as f64;
    let spatial = params.compactness / (step_r * step_c).sqrt();
    let w2 = spatial * spatial;

    // centre = [f0, f1, f2, row, col]
    let mut centres: Vec<[f64; 5]> = Vec::with_capacity(gr * gc);
    for i in 0..gr {
        for j in 0..gc {
            let r = i as f64 * step_r + (step_r - 1.0) / 2.0;
            let c = j as f64 * step_c + (step_c - 1.0) / 2.0;
            let (p, r, c) = lowest_gradient_near(&grad2, rows, cols, r, c);
            centres.push([feats[0][p], feats[1][p], feats[2][p], r, c]);
        }
    }
    let dist = |k: &[f64; 5], p: usize| {
        let (r, c) = ((p / cols) as f64, (p % cols) as f64);
        let df = (0..3).map(|f| (feats[f][p] - k[f]).powi(2)).sum::<f64>();
        df + w2 * ((r - k[3]).powi(2) + (c - k[4]).powi(2))
    };

    let mut assign = vec![usize::MAX; n];
    for _ in 0..params.iterations.max(1) {
        let mut best = vec![f64::INFINITY; n];
        assign.fill(usize::MAX);
        for (k, centre) in centres.iter().enumerate() {
            let r0 = (centre[3] - step_r).floor().max(0.0) as usize;
            let r1 = ((centre[3] + step_r).ceil() as usize).min(rows - 1);
            let c0 = (centre[4] - step_c).floor().max(0.0) as usize;
            let c1 = ((centre[4] + step_c).ceil() as usize).min(cols - 1);
            for r in r0..=r1 {
                for c in c0..=c1 {
                    let p = r * cols + c;
                    let d = dist(centre, p);
                    if d < best[p] {
                        best[p] = d;
                        assign[p] = k;
                    }
                }
            }
        }
        for p in 0..n {
            if assign[p] == usize::MAX {
                // outside every search window: nearest centre overall
                let mut choice = (0, f64::INFINITY);
                for (k, centre) in centres.iter().enumerate() {
                    let d = dist(centre, p);
                    if d < choice.1 {
                        choice = (k, d);
                    }
                }
                assign[p] = choice.0;
            }
        }
        let mut sums = vec![[0.0; 5]; centres.len()];
        let mut counts = vec![0usize; centres.len()];
        for p in 0..n {
            let k = assign[p];
            let s = &mut sums[k];
            for f in 0..3 {
                s[f] += feats[f][p];
            }
            s[3] += (p / cols) as f64;
            s[4] += (p % cols) as f64;
            counts[k] += 1;
        }
        for (k, centre) in centres.iter_mut().enumerate() {
            if counts[k] > 0 {
                for f in 0..5 {
                    centre[f] = sums[k][f] / counts[k] as f64;
                }
            }
        }
    }

    Ok(enforce_connectivity(rows, cols, &assign))
}

/// Keeps the largest piece of each cluster and merges every other piece
/// into the largest segment it touches.
fn enforce_connectivity(rows: usize, cols: usize, assign: &[usize]) -> SuperpixelMap {
    let raw = SuperpixelMap::from_labels(rows, cols, assign);
    let pieces = raw.components();
    let mut piece_of = vec![0usize; assign.len()];
    for (i, (_, pixels)) in pieces.iter().enumerate() {
        for &p in pixels {
            piece_of[p] = i;
        }
    }
    // the main piece of each id is its largest (first in raster order on ties)
    let mut main = vec![usize::MAX; raw.segment_count];
    for (i, (id, pixels)) in pieces.iter().enumerate() {
        if main[*id] == usize::MAX || pixels.len() > pieces[main[*id]].1.len() {
            main[*id] = i;
        }
    }
    let mut parent: Vec<usize> = (0..pieces.len()).collect();
    let mut size: Vec<usize> = pieces.iter().map(|p| p.1.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, (id, pixels)) in pieces.iter().enumerate() {
        if main[*id] == i {
            continue;
        }
        let me = find(&mut parent, i);
        let mut best: Option<(usize, usize)> = None;
        for &p in pixels {
            let (r, c) = (p / cols, p % cols);
            let mut neighbours = Vec::with_capacity(4);
            if r > 0 {
                neighbours.push(p - cols);
            }
            if r + 1 < rows {
                neighbours.push(p + cols);
            }
            if c > 0 {
                neighbours.push(p - 1);
            }
            if c + 1 < cols {
                neighbours.push(p + 1);
            }
            for q in neighbours {
                let other = find(&mut parent, piece_of[q]);
                if other == me {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((b, s)) => size[other] > s || (size[other] == s && other < b),
                };
                if better {
                    best = Some((other, size[other]));
                }
            }
        }
        if let Some((target, _)) = best {
            parent[me] = target;
            size[target] += size[me];
        }
    }
    let merged: Vec<usize> = (0..assign.len()).map(|p| find(&mut parent, piece_of[p])).collect();
    SuperpixelMap::from_labels(rows, cols, &merged)
}
