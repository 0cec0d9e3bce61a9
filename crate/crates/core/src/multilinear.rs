//! Third-order tensors: unfolding, mode products, coherence eigen-ratios, MPCA.

use log::debug;

use crate::error::{dim, invalid, Error, Result};
use crate::linalg::{sym_eigen, Matrix};

/// Dense third-order tensor, last index fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dims: (usize, usize, usize),
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn new(dims: (usize, usize, usize), data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.0 * dims.1 * dims.2 {
            return Err(dim(format!(
                "{} values cannot fill a {:?} tensor",
                data.len(),
                dims
            )));
        }
        if let Some(p) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(p));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: (usize, usize, usize)) -> Self {
        Self {
            dims,
            data: vec![0.0; dims.0 * dims.1 * dims.2],
        }
    }

    pub fn from_fn(
        dims: (usize, usize, usize),
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(dims.0 * dims.1 * dims.2);
        for i in 0..dims.0 {
            for j in 0..dims.1 {
                for k in 0..dims.2 {
                    data.push(f(i, j, k));
                }
            }
        }
        Self { dims, data }
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dims.1 + j) * self.dims.2 + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.dims.1 + j) * self.dims.2 + k] = v;
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &Tensor3) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    fn dim_of(&self, mode: usize) -> usize {
        match mode {
            1 => self.dims.0,
            2 => self.dims.1,
            _ => self.dims.2,
        }
    }
}

fn check_mode(mode: usize) -> Result<()> {
    if (1..=3).contains(&mode) {
        Ok(())
    } else {
        Err(invalid(format!("tensor mode must be 1, 2 or 3, got {mode}")))
    }
}

/// Position of element `(i1, i2, i3)` in the mode-`mode` unfolding.
///
/// Columns follow cyclic order: mode 1 sweeps `(i2, i3)` with `i2` fastest,
/// mode 2 sweeps `(i3, i1)` with `i3` fastest, mode 3 sweeps `(i1, i2)` with `i1` fastest.
#[inline]
fn unfold_pos(dims: (usize, usize, usize), mode: usize, i: usize, j: usize, k: usize) -> (usize, usize) {
    let (d1, _, d3) = dims;
    match mode {
        1 => (i, j + dims.1 * k),
        2 => (j, k + d3 * i),
        _ => (k, i + d1 * j),
    }
}

pub fn unfold(t: &Tensor3, mode: usize) -> Result<Matrix> {
    check_mode(mode)?;
    let (d1, d2, d3) = t.dims;
    let rows = t.dim_of(mode);
    let cols = d1 * d2 * d3 / rows.max(1);
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..d1 {
        for j in 0..d2 {
            for k in 0..d3 {
                let (r, c) = unfold_pos(t.dims, mode, i, j, k);
                m.set(r, c, t.get(i, j, k));
            }
        }
    }
    Ok(m)
}

pub fn fold(m: &Matrix, mode: usize, dims: (usize, usize, usize)) -> Result<Tensor3> {
    check_mode(mode)?;
    let rows = match mode {
        1 => dims.0,
        2 => dims.1,
        _ => dims.2,
    };
    let total = dims.0 * dims.1 * dims.2;
    if m.rows() != rows || m.rows() * m.cols() != total {
        return Err(dim(format!(
            "a {}x{} matrix does not fold into {:?} along mode {}",
            m.rows(),
            m.cols(),
            dims,
            mode
        )));
    }
    Ok(Tensor3::from_fn(dims, |i, j, k| {
        let (r, c) = unfold_pos(dims, mode, i, j, k);
        m.get(r, c)
    }))
}

/// `t ×_mode m`: contracts the mode index of `t` with the columns of `m`.
pub fn mode_product(t: &Tensor3, m: &Matrix, mode: usize) -> Result<Tensor3> {
    check_mode(mode)?;
    let n = t.dim_of(mode);
    if m.cols() != n {
        return Err(dim(format!(
            "mode-{} product needs {} matrix columns, got {}",
            mode,
            n,
            m.cols()
        )));
    }
    let (d1, d2, d3) = t.dims;
    let out_dims = match mode {
        1 => (m.rows(), d2, d3),
        2 => (d1, m.rows(), d3),
        _ => (d1, d2, m.rows()),
    };
    let mut out = Tensor3::zeros(out_dims);
    let (o1, o2, o3) = out_dims;
    match mode {
        1 => {
            let plane = d2 * d3;
            for r in 0..o1 {
                let dst = &mut out.data[r * plane..(r + 1) * plane];
                for i in 0..d1 {
                    let a = m.get(r, i);
                    if a == 0.0 {
                        continue;
                    }
                    for (o, s) in dst.iter_mut().zip(&t.data[i * plane..(i + 1) * plane]) {
                        *o += a * s;
                    }
                }
            }
        }
        2 => {
            for i in 0..d1 {
                for r in 0..o2 {
                    let dst = (i * o2 + r) * o3;
                    for j in 0..d2 {
                        let a = m.get(r, j);
                        if a == 0.0 {
                            continue;
                        }
                        let src = (i * d2 + j) * d3;
                        for k in 0..d3 {
                            out.data[dst + k] += a * t.data[src + k];
                        }
                    }
                }
            }
        }
        _ => {
            for i in 0..d1 {
                for j in 0..d2 {
                    let src = &t.data[(i * d2 + j) * d3..(i * d2 + j + 1) * d3];
                    let base = (i * o2 + j) * o3;
                    for r in 0..o3 {
                        out.data[base + r] = m.row(r).iter().zip(src).map(|(a, b)| a * b).sum();
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Share of the mean-removed covariance captured by its leading eigenvalue.
///
/// Each row has its mean removed (the mean column is subtracted from every
/// column). A covariance with trace below `1e-12 * entries` is treated as
/// perfectly coherent and yields exactly 1.
pub fn leading_eig_ratio(m: &Matrix) -> Result<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(dim("empty matrix"));
    }
    if let Some(p) = m.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(p));
    }
    let mut centered = m.clone();
    let cols = m.cols();
    for r in 0..m.rows() {
        let row = &mut centered.data_mut()[r * cols..(r + 1) * cols];
        let mean = row.iter().sum::<f64>() / cols as f64;
        row.iter_mut().for_each(|v| *v -= mean);
    }
    Ok(ratio_of_centered(&centered))
}

pub(crate) fn ratio_of_centered(centered: &Matrix) -> f64 {
    let entries = (centered.rows() * centered.cols()) as f64;
    let gram = centered.small_gram();
    let trace = gram.trace();
    if trace < 1e-12 * entries {
        return 1.0;
    }
    let lambda1 = if gram.rows() == 1 {
        trace
    } else {
        sym_eigen(&gram).values[0]
    };
    if trace - lambda1 <= 1e-12 * trace {
        return 1.0;
    }
    (lambda1 / trace).clamp(0.0, 1.0)
}

/// An odd-sized set of equally shaped tensors around a center member.
#[derive(Clone, Debug)]
pub struct TensorGroup {
    members: Vec<Tensor3>,
}

impl TensorGroup {
    pub fn new(members: Vec<Tensor3>) -> Result<Self> {
        if members.len() < 3 || members.len().is_multiple_of(2) {
            return Err(invalid(format!(
                "a tensor group needs an odd member count >= 3, got {}",
                members.len()
            )));
        }
        let d = members[0].dims();
        if members.iter().any(|m| m.dims() != d) {
            return Err(dim("tensor group members differ in shape"));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[Tensor3] {
        &self.members
    }

    pub fn center_index(&self) -> usize {
        self.members.len() / 2
    }

    pub fn center(&self) -> &Tensor3 {
        &self.members[self.center_index()]
    }
}

/// Per-mode projection matrices with orthonormal rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    pub u: [Matrix; 3],
}

impl SubspaceBasis {
    pub fn identity(dims: (usize, usize, usize)) -> Self {
        Self {
            u: [
                Matrix::identity(dims.0),
                Matrix::identity(dims.1),
                Matrix::identity(dims.2),
            ],
        }
    }

    /// The first `r_i` rows of the identity for each mode.
    pub fn truncated_identity(dims: (usize, usize, usize), reduced: (usize, usize, usize)) -> Self {
        let eye = |r: usize, n: usize| Matrix::from_fn(r, n, |a, b| if a == b { 1.0 } else { 0.0 });
        Self {
            u: [
                eye(reduced.0, dims.0),
                eye(reduced.1, dims.1),
                eye(reduced.2, dims.2),
            ],
        }
    }

    pub fn reduced_dims(&self) -> (usize, usize, usize) {
        (self.u[0].rows(), self.u[1].rows(), self.u[2].rows())
    }
}

/// `t ×1 U1 ×2 U2 ×3 U3`.
pub fn subspace_project(t: &Tensor3, b: &SubspaceBasis) -> Result<Tensor3> {
    let a = mode_product(t, &b.u[0], 1)?;
    let a = mode_product(&a, &b.u[1], 2)?;
    mode_product(&a, &b.u[2], 3)
}

/// Maps a projected tensor back with the transposed bases.
pub fn subspace_reconstruct(t: &Tensor3, b: &SubspaceBasis) -> Result<Tensor3> {
    let a = mode_product(t, &b.u[0].transpose(), 1)?;
    let a = mode_product(&a, &b.u[1].transpose(), 2)?;
    mode_product(&a, &b.u[2].transpose(), 3)
}

#[derive(Clone, Debug)]
pub struct MpcaFit {
    pub basis: SubspaceBasis,
    /// Captured variance after initialization and after each full sweep.
    pub variance_trace: Vec<f64>,
    /// Set when the centered members carry no variance; the basis is then arbitrary.
    pub degenerate: bool,
}

fn top_rows(scatter: &Matrix, r: usize) -> Matrix {
    let e = sym_eigen(scatter);
    Matrix::from_fn(r, scatter.rows(), |a, b| e.vectors.get(b, a))
}

fn captured_variance(centered: &[Tensor3], b: &SubspaceBasis) -> Result<f64> {
    let mut total = 0.0;
    for x in centered {
        let y = subspace_project(x, b)?;
        total += y.data.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(total)
}

/// Alternating MPCA over the members of a group (or any tensor set).
pub fn mpca_fit(
    members: &[Tensor3],
    reduced: (usize, usize, usize),
    max_iter: usize,
    tol: f64,
) -> Result<MpcaFit> {
    if members.len() < 2 {
        return Err(invalid("MPCA needs at least two tensors"));
    }
    let dims = members[0].dims();
    if members.iter().any(|m| m.dims() != dims) {
        return Err(dim("MPCA members differ in shape"));
    }
    let r = [reduced.0, reduced.1, reduced.2];
    let d = [dims.0, dims.1, dims.2];
    for k in 0..3 {
        if r[k] == 0 || r[k] > d[k] {
            return Err(invalid(format!(
                "reduced dimension {} of mode {} must lie in 1..={}",
                r[k],
                k + 1,
                d[k]
            )));
        }
    }

    let n = members.len() as f64;
    let mut mean = Tensor3::zeros(dims);
    for m in members {
        for (a, b) in mean.data.iter_mut().zip(&m.data) {
            *a += b / n;
        }
    }
    let centered: Vec<Tensor3> = members
        .iter()
        .map(|m| Tensor3 {
            dims,
            data: m.data.iter().zip(&mean.data).map(|(a, b)| a - b).collect(),
        })
        .collect();
    let total: f64 = centered.iter().map(|x| x.data.iter().map(|v| v * v).sum::<f64>()).sum();
    let scale: f64 = members.iter().map(|x| x.data.iter().map(|v| v * v).sum::<f64>()).sum();
    if total <= 1e-24 * scale.max(1.0) {
        return Ok(MpcaFit {
            basis: SubspaceBasis::truncated_identity(dims, reduced),
            variance_trace: vec![0.0],
            degenerate: true,
        });
    }

    let mut u: Vec<Matrix> = Vec::with_capacity(3);
    for mode in 1..=3 {
        let mut scatter = Matrix::zeros(d[mode - 1], d[mode - 1]);
        for x in &centered {
            let g = unfold(x, mode)?.gram_rows();
            for (s, v) in scatter.data_mut().iter_mut().zip(g.data()) {
                *s += v;
            }
        }
        u.push(top_rows(&scatter, r[mode - 1]));
    }
    let mut basis = SubspaceBasis {
        u: [u[0].clone(), u[1].clone(), u[2].clone()],
    };
    let mut trace = vec![captured_variance(&centered, &basis)?];

    for iter in 0..max_iter {
        for mode in 1..=3 {
            let mut scatter = Matrix::zeros(d[mode - 1], d[mode - 1]);
            for x in &centered {
                let mut y = x.clone();
                for other in 1..=3 {
                    if other != mode {
                        y = mode_product(&y, &basis.u[other - 1], other)?;
                    }
                }
                let g = unfold(&y, mode)?.gram_rows();
                for (s, v) in scatter.data_mut().iter_mut().zip(g.data()) {
                    *s += v;
                }
            }
            basis.u[mode - 1] = top_rows(&scatter, r[mode - 1]);
        }
        let psi = captured_variance(&centered, &basis)?;
        let prev = *trace.last().unwrap();
        trace.push(psi);
        debug!("mpca iteration {}: captured variance {psi:.6e}", iter + 1);
        if psi - prev < tol * prev.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(MpcaFit {
        basis,
        variance_trace: trace,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(dims: (usize, usize, usize), rng: &mut ChaCha8Rng) -> Tensor3 {
        Tensor3::from_fn(dims, |_, _, _| rng.random_range(-1.0..1.0))
    }

    fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn unfold_counting_tensor() {
        let t = Tensor3::from_fn((2, 2, 2), |i, j, k| (i * 4 + j * 2 + k + 1) as f64);
        let m1 = unfold(&t, 1).unwrap();
        assert_eq!(m1.shape(), (2, 4));
        assert_eq!(m1.row(0), &[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(m1.row(1), &[5.0, 7.0, 6.0, 8.0]);
        let m2 = unfold(&t, 2).unwrap();
        assert_eq!(m2.row(0), &[1.0, 2.0, 5.0, 6.0]);
        let m3 = unfold(&t, 3).unwrap();
        assert_eq!(m3.row(0), &[1.0, 5.0, 3.0, 7.0]);
    }

    #[test]
    fn zero_tensor_unfolds_to_zero() {
        let t = Tensor3::zeros((2, 3, 4));
        for mode in 1..=3 {
            assert!(unfold(&t, mode).unwrap().data().iter().all(|&v| v == 0.0));
        }
        assert!(unfold(&t, 4).is_err());
    }

    #[test]
    fn fold_random_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_matrix(3, 8, &mut rng);
        let t = fold(&m, 1, (3, 2, 4)).unwrap();
        assert_eq!(unfold(&t, 1).unwrap(), m);
        assert!(fold(&m, 2, (3, 2, 4)).is_err());
    }

    proptest! {
        #[test]
        fn fold_unfold_roundtrip(d1 in 1usize..=8, d2 in 1usize..=8, d3 in 1usize..=8, mode in 1usize..=3, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tensor((d1, d2, d3), &mut rng);
            let m = unfold(&t, mode).unwrap();
            prop_assert_eq!(fold(&m, mode, (d1, d2, d3)).unwrap(), t);
        }
    }

    #[test]
    fn mode_product_hand_cases() {
        let ones = Tensor3::from_fn((2, 2, 2), |_, _, _| 1.0);
        let row = Matrix::from_vec(1, 2, vec![1.0, 1.0]).unwrap();
        let p = mode_product(&ones, &row, 1).unwrap();
        assert_eq!(p.dims(), (1, 2, 2));
        assert!(p.data().iter().all(|&v| v == 2.0));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = random_tensor((3, 4, 5), &mut rng);
        for mode in 1..=3 {
            let n = t.dim_of(mode);
            assert_eq!(mode_product(&t, &Matrix::identity(n), mode).unwrap(), t);
        }
        assert!(mode_product(&t, &Matrix::identity(4), 1).is_err());
    }

    #[test]
    fn mode_product_matches_unfold_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_tensor((3, 4, 5), &mut rng);
        for (mode, n) in [(1, 3), (2, 4), (3, 5)] {
            let m = random_matrix(2, n, &mut rng);
            let fast = mode_product(&t, &m, mode).unwrap();
            let mut dims = t.dims();
            match mode {
                1 => dims.0 = 2,
                2 => dims.1 = 2,
                _ => dims.2 = 2,
            }
            let slow = fold(&m.matmul(&unfold(&t, mode).unwrap()).unwrap(), mode, dims).unwrap();
            assert!(fast.distance(&slow) < 1e-12);
        }
    }

    #[test]
    fn mode_products_commute_across_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = random_tensor((3, 4, 5), &mut rng);
        let a = random_matrix(2, 3, &mut rng);
        let b = random_matrix(6, 4, &mut rng);
        let ab = mode_product(&mode_product(&t, &a, 1).unwrap(), &b, 2).unwrap();
        let ba = mode_product(&mode_product(&t, &b, 2).unwrap(), &a, 1).unwrap();
        for (x, y) in ab.data().iter().zip(ba.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn orthonormal_products_preserve_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_tensor((4, 4, 4), &mut rng);
        let q = sym_eigen(&random_matrix(4, 4, &mut rng).gram_rows()).vectors;
        for mode in 1..=3 {
            let p = mode_product(&t, &q, mode).unwrap();
            assert!((p.frobenius_norm() - t.frobenius_norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn eig_ratio_degenerate_cases() {
        let same = Matrix::from_fn(3, 5, |_, c| (c as f64).sin());
        assert_eq!(leading_eig_ratio(&same).unwrap(), 1.0);
        assert_eq!(leading_eig_ratio(&Matrix::zeros(4, 6)).unwrap(), 1.0);
        let bad = Matrix::from_vec(1, 2, vec![1.0, f64::NAN]).unwrap();
        assert!(leading_eig_ratio(&bad).is_err());
    }

    #[test]
    fn eig_ratio_matches_explicit_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let m = random_matrix(4, 6, &mut rng);
            // explicit 6x6 covariance of the row-centered matrix, solved by nalgebra
            let mut c = nalgebra::DMatrix::<f64>::zeros(4, 6);
            for r in 0..4 {
                let mean = m.row(r).iter().sum::<f64>() / 6.0;
                for k in 0..6 {
                    c[(r, k)] = m.get(r, k) - mean;
                }
            }
            let cov = c.transpose() * &c;
            let eig = cov.clone().symmetric_eigen();
            let l1 = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
            let oracle = l1 / cov.trace();
            let ours = leading_eig_ratio(&m).unwrap();
            assert!((ours - oracle).abs() < 1e-10, "{ours} vs {oracle}");
        }
    }

    #[test]
    fn mpca_identical_members_are_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = random_tensor((4, 4, 3), &mut rng);
        let fit = mpca_fit(&[t.clone(), t.clone(), t], (2, 2, 2), 20, 1e-4).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.variance_trace, vec![0.0]);
    }

    #[test]
    fn mpca_full_rank_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let members: Vec<Tensor3> = (0..5).map(|_| random_tensor((3, 4, 5), &mut rng)).collect();
        let fit = mpca_fit(&members, (3, 4, 5), 5, 1e-4).unwrap();
        for m in &members {
            let back = subspace_reconstruct(&subspace_project(m, &fit.basis).unwrap(), &fit.basis)
                .unwrap();
            assert!(back.distance(m) < 1e-8);
        }
    }

    #[test]
    fn mpca_variance_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let members: Vec<Tensor3> = (0..5).map(|_| random_tensor((4, 4, 4), &mut rng)).collect();
        let fit = mpca_fit(&members, (2, 2, 2), 20, 0.0).unwrap();
        assert!(fit.variance_trace.len() >= 2);
        for w in fit.variance_trace.windows(2) {
            assert!(w[1] >= w[0] * (1.0 - 1e-12), "{:?}", fit.variance_trace);
        }
        for u in &fit.basis.u {
            let uut = u.matmul(&u.transpose()).unwrap();
            for i in 0..u.rows() {
                for j in 0..u.rows() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((uut.get(i, j) - want).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn mpca_rejects_oversized_reduction() {
        let t = Tensor3::zeros((2, 2, 2));
        assert!(mpca_fit(&[t.clone(), t], (3, 1, 1), 1, 1e-4).is_err());
    }

    #[test]
    fn project_zero_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let t = random_tensor((3, 2, 4), &mut rng);
        assert_eq!(subspace_project(&t, &SubspaceBasis::identity((3, 2, 4))).unwrap(), t);
        let z = Tensor3::zeros((3, 2, 4));
        let b = SubspaceBasis::truncated_identity((3, 2, 4), (2, 1, 3));
        assert!(subspace_project(&z, &b).unwrap().data().iter().all(|&v| v == 0.0));
    }
}
