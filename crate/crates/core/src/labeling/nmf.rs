//! Sparse, orthogonality-regularized NMF that turns image-level labels into
//! pixel-level labels.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::AugmentedDataset;
use super::sparsity::project_to_sparsity;
use crate::attributes::with_workers;
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// Basis columns are k-means centroids of each class's images.
    KMeans,
    /// Uniform random basis in (0, 1].
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NmfParams {
    pub n_f_per_class: usize,
    pub rho_w: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma1: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    pub init: InitKind,
    /// Project the initial basis columns to sparsity `rho_w`.
    pub sparsity_projection: bool,
    /// Rescale the columns of H to unit length after each update.
    pub normalize_h: bool,
    pub kmeans_iter: usize,
    /// Floor for the denominators of the multiplicative rules.
    pub eps_div: f64,
    pub workers: usize,
}

impl Default for NmfParams {
    fn default() -> Self {
        Self {
            n_f_per_class: 8,
            rho_w: 0.85,
            lambda1: 0.1,
            lambda2: 0.1,
            gamma1: 1.0,
            max_iter: 300,
            tol: 1e-5,
            seed: 0,
            init: InitKind::KMeans,
            sparsity_projection: true,
            normalize_h: true,
            kmeans_iter: 100,
            eps_div: 1e-12,
            workers: 0,
        }
    }
}

impl NmfParams {
    /// Plain Lee–Seung NMF: no regularizers, no sparsity, no rescaling.
    pub fn unconstrained() -> Self {
        Self {
            lambda1: 0.0,
            lambda2: 0.0,
            gamma1: 0.0,
            init: InitKind::Random,
            sparsity_projection: false,
            normalize_h: false,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NmfModel {
    /// `N_p × N_f` basis.
    pub w: Matrix,
    /// `N_f × N_s` coefficients.
    pub h: Matrix,
    /// Class of each basis column.
    pub feature_class: Vec<u8>,
    pub class_count: usize,
    /// `N_f × N_f` orthogonality target.
    pub b: Matrix,
    pub params: NmfParams,
    pub initial_objective: f64,
    /// Objective after each iteration.
    pub objective_log: Vec<f64>,
    pub converged: bool,
}

impl NmfModel {
    /// `N_f × N_l` 0/1 membership matrix.
    pub fn q(&self) -> Matrix {
        Matrix::from_fn(self.feature_class.len(), self.class_count, |i, j| {
            if self.feature_class[i] as usize == j {
                1.0
            } else {
                0.0
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NmfResult {
    /// Row-major pixel labels of each image.
    pub labels: Vec<Vec<u8>>,
    pub model: NmfModel,
}

// ---------- dense kernels; every output entry is reduced in a fixed order ----------

/// `a · bᵀ` for row-major `a` (m × k) and `b` (n × k).
fn mul_abt(a: &Matrix, b: &Matrix) -> Matrix {
    let (m, k) = a.shape();
    let n = b.rows();
    let mut out = vec![0.0; m * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let ar = &a.data()[i * k..(i + 1) * k];
        for (j, o) in row.iter_mut().enumerate() {
            let br = &b.data()[j * k..(j + 1) * k];
            *o = ar.iter().zip(br).map(|(x, y)| x * y).sum();
        }
    });
    Matrix::from_vec(m, n, out).expect("shape")
}

/// `aᵀ · b` for row-major `a` (k × m) and `b` (k × n).
fn mul_atb(a: &Matrix, b: &Matrix) -> Matrix {
    let (k, m) = a.shape();
    let n = b.cols();
    let mut out = vec![0.0; m * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for p in 0..k {
            let coef = a.data()[p * m + i];
            if coef == 0.0 {
                continue;
            }
            let br = &b.data()[p * n..(p + 1) * n];
            for (o, v) in row.iter_mut().zip(br) {
                *o += coef * v;
            }
        }
    });
    Matrix::from_vec(m, n, out).expect("shape")
}

/// `a · b` for row-major `a` (m × k) and `b` (k × n).
fn mul_ab(a: &Matrix, b: &Matrix) -> Matrix {
    let (m, k) = a.shape();
    let n = b.cols();
    let mut out = vec![0.0; m * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for p in 0..k {
            let coef = a.data()[i * k + p];
            if coef == 0.0 {
                continue;
            }
            let br = &b.data()[p * n..(p + 1) * n];
            for (o, v) in row.iter_mut().zip(br) {
                *o += coef * v;
            }
        }
    });
    Matrix::from_vec(m, n, out).expect("shape")
}

fn sq_norm(m: &Matrix) -> f64 {
    m.data().iter().map(|v| v * v).sum()
}

/// `‖X − WH‖² + λ1‖W‖² + λ2‖H‖² + γ1‖HHᵀ − B‖²`.
pub fn sonmf_objective(x: &Matrix, w: &Matrix, h: &Matrix, b: &Matrix, p: &NmfParams) -> f64 {
    let ns = x.cols();
    let nf = w.cols();
    const CHUNK: usize = 64;
    let partial: Vec<f64> = x
        .data()
        .par_chunks(CHUNK * ns)
        .enumerate()
        .map(|(c, block)| {
            let mut acc = 0.0;
            let mut wh = vec![0.0; ns];
            for (r, xrow) in block.chunks(ns).enumerate() {
                let row = c * CHUNK + r;
                wh.fill(0.0);
                for i in 0..nf {
                    let coef = w.get(row, i);
                    if coef == 0.0 {
                        continue;
                    }
                    for (o, v) in wh.iter_mut().zip(h.row(i)) {
                        *o += coef * v;
                    }
                }
                acc += xrow.iter().zip(&wh).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            }
            acc
        })
        .collect();
    let fit: f64 = partial.iter().sum();
    let mut total = fit + p.lambda1 * sq_norm(w) + p.lambda2 * sq_norm(h);
    if p.gamma1 != 0.0 {
        let hht = mul_abt(h, h);
        let orth: f64 = hht.data().iter().zip(b.data()).map(|(a, b)| (a - b) * (a - b)).sum();
        total += p.gamma1 * orth;
    }
    total
}

fn kmeans(points: &[Vec<f64>], k: usize, iters: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    if points.len() <= k {
        // fewer images than centroids: reuse them in turn
        return (0..k).map(|i| points[i % points.len()].clone()).collect();
    }
    // k-means++ seeding
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut t = rng.random_range(0.0..total);
            let mut pick = points.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if t < d {
                    pick = i;
                    break;
                }
                t -= d;
            }
            pick
        } else {
            centroids.len() % points.len()
        };
        centroids.push(points[next].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist(p, &centroids[centroids.len() - 1]));
        }
    }
    let mut assign = vec![usize::MAX; points.len()];
    for _ in 0..iters {
        let mut changed = false;
        for (a, p) in assign.iter_mut().zip(points) {
            let best = (0..k)
                .map(|c| (c, dist(p, &centroids[c])))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
                .0;
            if *a != best {
                *a = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points.iter().zip(&assign).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
            if members.is_empty() {
                continue;
            }
            centroid.iter_mut().for_each(|v| *v = 0.0);
            for m in &members {
                for (v, x) in centroid.iter_mut().zip(m.iter()) {
                    *v += x;
                }
            }
            let n = members.len() as f64;
            centroid.iter_mut().for_each(|v| *v /= n);
        }
    }
    centroids
}

/// `L_n = W (Q ⊙ h_n 1ᵀ)` followed by a row-wise argmax (ties go to the
/// lower class).
pub fn pixel_labels(w: &Matrix, feature_class: &[u8], class_count: usize, h_n: &[f64]) -> Vec<u8> {
    let (np, nf) = w.shape();
    (0..np)
        .map(|p| {
            let mut likelihood = vec![0.0; class_count];
            for i in 0..nf {
                likelihood[feature_class[i] as usize] += w.get(p, i) * h_n[i];
            }
            let mut best = 0;
            for j in 1..class_count {
                if likelihood[j] > likelihood[best] {
                    best = j;
                }
            }
            best as u8
        })
        .collect()
}

fn normalize_columns(h: &mut Matrix) {
    let (nf, ns) = h.shape();
    for n in 0..ns {
        let norm = (0..nf).map(|i| h.get(i, n).powi(2)).sum::<f64>().sqrt();
        if norm > 0.0 {
            for i in 0..nf {
                h.set(i, n, h.get(i, n) / norm);
            }
        }
    }
}

/// Pixel-level annotation from image-level labels. `observe` sees
/// `(iteration, W, H, objective)` after every iteration.
pub fn nmf_pixel_annotation_observed(
    data: &AugmentedDataset,
    params: &NmfParams,
    observe: &mut (dyn FnMut(usize, &Matrix, &Matrix, f64) + Send),
) -> Result<NmfResult> {
    data.validate()?;
    let (np, ns) = data.x.shape();
    let nl = data.class_count;
    let nf = nl * params.n_f_per_class;
    if params.n_f_per_class == 0 || nl == 0 {
        return Err(invalid("need at least one class and one feature per class"));
    }
    if nf > ns {
        return Err(invalid(format!("{nf} features exceed {ns} images")));
    }
    if params.sparsity_projection && !(params.rho_w > 0.0 && params.rho_w < 1.0) {
        return Err(invalid("sparsity rho_w must lie strictly inside (0, 1)"));
    }
    if [params.lambda1, params.lambda2, params.gamma1].iter().any(|v| !(*v >= 0.0)) {
        return Err(invalid("regularization weights must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut feature_class = Vec::with_capacity(nf);
    let mut w = Matrix::zeros(np, nf);
    match params.init {
        InitKind::KMeans => {
            for class in 0..nl {
                let columns: Vec<Vec<f64>> = (0..ns)
                    .filter(|&n| data.labels[n] as usize == class)
                    .map(|n| (0..np).map(|p| data.x.get(p, n)).collect())
                    .collect();
                if columns.is_empty() {
                    return Err(Error::Empty(format!("class {class} has no images")));
                }
                for centroid in kmeans(&columns, params.n_f_per_class, params.kmeans_iter, &mut rng) {
                    let i = feature_class.len();
                    for (p, v) in centroid.into_iter().enumerate() {
                        w.set(p, i, v);
                    }
                    feature_class.push(class as u8);
                }
            }
        }
        InitKind::Random => {
            for v in w.data_mut() {
                *v = 1.0 - rng.random::<f64>();
            }
            for class in 0..nl {
                feature_class.extend(std::iter::repeat_n(class as u8, params.n_f_per_class));
            }
        }
    }
    if params.sparsity_projection {
        for i in 0..nf {
            let col: Vec<f64> = (0..np).map(|p| w.get(p, i)).collect();
            let projected = project_to_sparsity(&col, params.rho_w, 1.0)?;
            for (p, v) in projected.into_iter().enumerate() {
                w.set(p, i, v);
            }
        }
    }
    let b = Matrix::from_fn(nf, nf, |_, _| 1.0 - rng.random::<f64>());
    let mut h = Matrix::from_fn(nf, ns, |_, _| 1.0 - rng.random::<f64>());

    let eps = params.eps_div;
    let x = &data.x;
    let (log, converged, initial) = with_workers(params.workers, || {
        let initial = sonmf_objective(x, &w, &h, &b, params);
        let mut log = Vec::with_capacity(params.max_iter);
        let mut prev = initial;
        let mut converged = false;
        let bsym = Matrix::from_fn(nf, nf, |i, j| b.get(i, j) + b.get(j, i));
        for t in 0..params.max_iter {
            // W ← W ⊙ (X Hᵀ) / (W H Hᵀ + λ1 W)
            let xht = mul_abt(x, &h);
            let hht = mul_abt(&h, &h);
            let whht = mul_ab(&w, &hht);
            for ((wv, num), den) in w.data_mut().iter_mut().zip(xht.data()).zip(whht.data()) {
                *wv *= num / (den + params.lambda1 * *wv).max(eps);
            }
            // H ← H ⊙ (Wᵀ X + γ1 (B + Bᵀ) H) / (Wᵀ W H + γ1 H Hᵀ H + λ2 H)
            let wtx = mul_atb(&w, x);
            let wtw = mul_atb(&w, &w);
            let wtwh = mul_ab(&wtw, &h);
            let (bh, hhth) = if params.gamma1 != 0.0 {
                (mul_ab(&bsym, &h), mul_ab(&hht, &h))
            } else {
                (Matrix::zeros(nf, ns), Matrix::zeros(nf, ns))
            };
            for (k, hv) in h.data_mut().iter_mut().enumerate() {
                let num = wtx.data()[k] + params.gamma1 * bh.data()[k];
                let den = wtwh.data()[k] + params.gamma1 * hhth.data()[k] + params.lambda2 * *hv;
                *hv *= num / den.max(eps);
            }
            if params.normalize_h {
                normalize_columns(&mut h);
            }
            let obj = sonmf_objective(x, &w, &h, &b, params);
            observe(t, &w, &h, obj);
            log.push(obj);
            if (prev - obj).abs() <= params.tol * prev.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
            prev = obj;
        }
        (log, converged, initial)
    });
    if !converged {
        warn!("NMF stopped at max_iter = {} before reaching tol = {}", params.max_iter, params.tol);
    }

    let labels = (0..ns)
        .map(|n| {
            let hn: Vec<f64> = (0..nf).map(|i| h.get(i, n)).collect();
            pixel_labels(&w, &feature_class, nl, &hn)
        })
        .collect();
    Ok(NmfResult {
        labels,
        model: NmfModel {
            w,
            h,
            feature_class,
            class_count: nl,
            b,
            params: params.clone(),
            initial_objective: initial,
            objective_log: log,
            converged,
        },
    })
}

pub fn nmf_pixel_annotation(data: &AugmentedDataset, params: &NmfParams) -> Result<NmfResult> {
    nmf_pixel_annotation_observed(data, params, &mut |_, _, _, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::dataset::PatchSource;
    use crate::volume::Section2D;

    fn random_dataset(np_side: usize, ns: usize, classes: usize, seed: u64) -> AugmentedDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let images: Vec<Section2D> = (0..ns)
            .map(|_| Section2D::from_fn(np_side, np_side, |_, _| rng.random_range(0.0..1.0)))
            .collect();
        let labels = (0..ns).map(|n| (n % classes) as u8).collect();
        AugmentedDataset::from_images(&images, labels, classes, vec![PatchSource::default(); ns]).unwrap()
    }

    #[test]
    fn kernels_match_naive_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Matrix::from_fn(5, 3, |_, _| rng.random_range(-1.0..1.0));
        let b = Matrix::from_fn(4, 3, |_, _| rng.random_range(-1.0..1.0));
        let c = Matrix::from_fn(5, 4, |_, _| rng.random_range(-1.0..1.0));
        let close = |x: &Matrix, y: &Matrix| x.data().iter().zip(y.data()).all(|(p, q)| (p - q).abs() < 1e-12);
        assert!(close(&mul_abt(&a, &b), &a.matmul(&b.transpose()).unwrap()));
        assert!(close(&mul_atb(&a, &c), &a.transpose().matmul(&c).unwrap()));
        assert!(close(&mul_ab(&a, &b.transpose()), &a.matmul(&b.transpose()).unwrap()));
    }

    #[test]
    fn one_feature_per_class_with_one_hot_h() {
        // features light up disjoint halves; each image uses exactly one
        let w = Matrix::from_fn(4, 2, |p, i| if (p < 2) == (i == 0) { 1.0 } else { 0.1 });
        assert_eq!(pixel_labels(&w, &[0, 1], 2, &[1.0, 0.0]), vec![0, 0, 0, 0]);
        assert_eq!(pixel_labels(&w, &[0, 1], 2, &[0.0, 1.0]), vec![1, 1, 1, 1]);
        assert_eq!(pixel_labels(&w, &[0, 1], 2, &[1.0, 1.0]), vec![0, 0, 1, 1]);
    }

    #[test]
    fn unconstrained_objective_never_increases() {
        let ds = random_dataset(6, 20, 2, 3);
        let params = NmfParams {
            n_f_per_class: 2,
            max_iter: 200,
            tol: 0.0,
            ..NmfParams::unconstrained()
        };
        let out = nmf_pixel_annotation(&ds, &params).unwrap();
        let log = &out.model.objective_log;
        assert_eq!(log.len(), 200);
        assert!(log[0] <= out.model.initial_objective);
        for pair in log.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "{} -> {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn constrained_iterates_stay_nonnegative_with_unit_columns() {
        let ds = random_dataset(6, 24, 3, 4);
        let params = NmfParams {
            n_f_per_class: 2,
            rho_w: 0.5,
            max_iter: 50,
            ..NmfParams::default()
        };
        let mut checked = 0;
        let out = nmf_pixel_annotation_observed(&ds, &params, &mut |_, w, h, _| {
            assert!(w.data().iter().all(|&v| v >= 0.0));
            assert!(h.data().iter().all(|&v| v >= 0.0));
            for n in 0..h.cols() {
                let norm = (0..h.rows()).map(|i| h.get(i, n).powi(2)).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-12);
            }
            checked += 1;
        })
        .unwrap();
        assert_eq!(checked, out.model.objective_log.len());
        assert_eq!(out.model.feature_class, vec![0, 0, 1, 1, 2, 2]);
        assert_eq!(out.labels.len(), 24);
        assert!(out.labels.iter().all(|l| l.len() == 36 && l.iter().all(|&c| c < 3)));
        let q = out.model.q();
        for i in 0..6 {
            assert_eq!((0..3).map(|j| q.get(i, j)).sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn bit_stable_across_worker_counts() {
        let ds = random_dataset(8, 16, 2, 5);
        let run = |workers| {
            let params = NmfParams { n_f_per_class: 3, max_iter: 20, workers, ..NmfParams::default() };
            nmf_pixel_annotation(&ds, &params).unwrap()
        };
        let (a, b) = (run(1), run(3));
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.model.w, b.model.w);
        assert_eq!(a.model.h, b.model.h);
        assert_eq!(a.model.objective_log, b.model.objective_log);
    }

    #[test]
    fn argument_errors() {
        let ds = random_dataset(4, 6, 2, 6);
        let too_many = NmfParams { n_f_per_class: 4, ..NmfParams::default() };
        assert!(nmf_pixel_annotation(&ds, &too_many).is_err());
        let bad_rho = NmfParams { n_f_per_class: 1, rho_w: 1.0, ..NmfParams::default() };
        assert!(nmf_pixel_annotation(&ds, &bad_rho).is_err());
    }
}
