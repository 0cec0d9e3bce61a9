//! Direct separable 3D DFT and the spectral-chaos cube dissimilarity.

use crate::error::{dim, Result};
use crate::multilinear::Tensor3;

/// Per-axis DFT tables for a fixed cube shape.
#[derive(Clone, Debug)]
pub struct Dft3 {
    dims: (usize, usize, usize),
    tables: [(Vec<f64>, Vec<f64>); 3],
}

fn table(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut c = vec![0.0; n * n];
    let mut s = vec![0.0; n * n];
    for k in 0..n {
        for t in 0..n {
            let angle = 2.0 * std::f64::consts::PI * ((k * t) % n) as f64 / n as f64;
            c[k * n + t] = angle.cos();
            s[k * n + t] = angle.sin();
        }
    }
    (c, s)
}

/// Scratch space for repeated transforms of one shape.
#[derive(Clone, Debug, Default)]
pub struct DftScratch {
    re: Vec<f64>,
    im: Vec<f64>,
    re2: Vec<f64>,
    im2: Vec<f64>,
    mag: Vec<f64>,
}

impl Dft3 {
    pub fn new(dims: (usize, usize, usize)) -> Self {
        Self {
            dims,
            tables: [table(dims.0), table(dims.1), table(dims.2)],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.0 * self.dims.1 * self.dims.2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes `|DFT3(x)|` for a real cube `x` into `out`.
    pub fn magnitude(&self, x: &[f64], out: &mut [f64], scratch: &mut DftScratch) {
        let (n1, n2, n3) = self.dims;
        let len = self.len();
        debug_assert_eq!(x.len(), len);
        for buf in [&mut scratch.re, &mut scratch.im, &mut scratch.re2, &mut scratch.im2] {
            buf.clear();
            buf.resize(len, 0.0);
        }

        // last axis: real input
        let (c3, s3) = &self.tables[2];
        for line in 0..n1 * n2 {
            let src = &x[line * n3..(line + 1) * n3];
            for k in 0..n3 {
                let (mut re, mut im) = (0.0, 0.0);
                let cr = &c3[k * n3..(k + 1) * n3];
                let sr = &s3[k * n3..(k + 1) * n3];
                for t in 0..n3 {
                    re += src[t] * cr[t];
                    im -= src[t] * sr[t];
                }
                scratch.re[line * n3 + k] = re;
                scratch.im[line * n3 + k] = im;
            }
        }

        // middle axis
        let (c2, s2) = &self.tables[1];
        for i in 0..n1 {
            for u in 0..n2 {
                let dst = (i * n2 + u) * n3;
                for j in 0..n2 {
                    let c = c2[u * n2 + j];
                    let s = s2[u * n2 + j];
                    let src = (i * n2 + j) * n3;
                    for k in 0..n3 {
                        let a = scratch.re[src + k];
                        let b = scratch.im[src + k];
                        scratch.re2[dst + k] += a * c + b * s;
                        scratch.im2[dst + k] += b * c - a * s;
                    }
                }
            }
        }

        // first axis
        let (c1, s1) = &self.tables[0];
        let plane = n2 * n3;
        scratch.re.iter_mut().for_each(|v| *v = 0.0);
        scratch.im.iter_mut().for_each(|v| *v = 0.0);
        for v in 0..n1 {
            for i in 0..n1 {
                let c = c1[v * n1 + i];
                let s = s1[v * n1 + i];
                for p in 0..plane {
                    let a = scratch.re2[i * plane + p];
                    let b = scratch.im2[i * plane + p];
                    scratch.re[v * plane + p] += a * c + b * s;
                    scratch.im[v * plane + p] += b * c - a * s;
                }
            }
        }
        for ((o, a), b) in out.iter_mut().zip(&scratch.re).zip(&scratch.im) {
            *o = a.hypot(*b);
        }
    }

    /// `mean |F(|F(|a - b|)|)|` for two flattened cubes of this shape.
    pub fn dissimilarity(&self, a: &[f64], b: &[f64], scratch: &mut DftScratch) -> f64 {
        let len = self.len();
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
        if diff.iter().all(|&d| d == 0.0) {
            return 0.0;
        }
        let mut inner = std::mem::take(&mut scratch.mag);
        inner.resize(len, 0.0);
        self.magnitude(&diff, &mut inner, scratch);
        let mut outer = vec![0.0; len];
        self.magnitude(&inner, &mut outer, scratch);
        scratch.mag = inner;
        outer.iter().sum::<f64>() / len as f64
    }
}

/// `|DFT3(x)|` of a real tensor.
pub fn dft3_magnitude(t: &Tensor3) -> Tensor3 {
    let d = Dft3::new(t.dims());
    let mut out = vec![0.0; d.len()];
    d.magnitude(t.data(), &mut out, &mut DftScratch::default());
    Tensor3::new(t.dims(), out).expect("finite magnitudes")
}

/// Spectral dissimilarity of two equally shaped cubes.
pub fn perceptual_dissimilarity(w_minus: &Tensor3, w_plus: &Tensor3) -> Result<f64> {
    if w_minus.dims() != w_plus.dims() {
        return Err(dim(format!(
            "cube shapes differ: {:?} vs {:?}",
            w_minus.dims(),
            w_plus.dims()
        )));
    }
    let d = Dft3::new(w_minus.dims());
    Ok(d.dissimilarity(w_minus.data(), w_plus.data(), &mut DftScratch::default()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cube(n: (usize, usize, usize), rng: &mut ChaCha8Rng) -> Tensor3 {
        Tensor3::from_fn(n, |_, _, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identical_cubes_are_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_cube((4, 4, 4), &mut rng);
        assert_eq!(perceptual_dissimilarity(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_cube((3, 4, 5), &mut rng);
        let b = random_cube((3, 4, 5), &mut rng);
        let ab = perceptual_dissimilarity(&a, &b).unwrap();
        let ba = perceptual_dissimilarity(&b, &a).unwrap();
        assert_eq!(ab, ba);
        assert!(ab > 0.0);
    }

    #[test]
    fn shape_mismatch() {
        let a = Tensor3::zeros((2, 2, 2));
        let b = Tensor3::zeros((2, 2, 3));
        assert!(perceptual_dissimilarity(&a, &b).is_err());
    }

    #[test]
    fn dc_bin_is_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_cube((3, 3, 3), &mut rng);
        let m = dft3_magnitude(&a);
        let sum: f64 = a.data().iter().sum();
        assert!((m.get(0, 0, 0) - sum.abs()).abs() < 1e-12);
    }

    #[test]
    fn matches_naive_triple_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_cube((2, 3, 4), &mut rng);
        let m = dft3_magnitude(&a);
        let tau = 2.0 * std::f64::consts::PI;
        for u in 0..2 {
            for v in 0..3 {
                for w in 0..4 {
                    let (mut re, mut im) = (0.0, 0.0);
                    for i in 0..2 {
                        for j in 0..3 {
                            for k in 0..4 {
                                let ph = tau
                                    * ((u * i) as f64 / 2.0 + (v * j) as f64 / 3.0 + (w * k) as f64 / 4.0);
                                re += a.get(i, j, k) * ph.cos();
                                im -= a.get(i, j, k) * ph.sin();
                            }
                        }
                    }
                    assert!((m.get(u, v, w) - re.hypot(im)).abs() < 1e-12);
                }
            }
        }
    }
}
