//! Hoyer's L1/L2 sparsity measure and the projection onto a sparsity level.

use crate::error::{invalid, Error, Result};

fn norms(w: &[f64]) -> (f64, f64) {
    let l1 = w.iter().map(|v| v.abs()).sum();
    let l2 = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    (l1, l2)
}

/// `(√N − ‖w‖₁/‖w‖₂) / (√N − 1)`: 0 for a constant vector, 1 for a one-hot one.
pub fn hoyer_sparsity(w: &[f64]) -> Result<f64> {
    if w.len() < 2 {
        return Err(invalid("sparsity needs a vector of length at least 2"));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(invalid("sparsity of a non-finite vector"));
    }
    let (l1, l2) = norms(w);
    if l2 == 0.0 {
        return Err(Error::Degenerate("sparsity of the zero vector".into()));
    }
    let sqrt_n = (w.len() as f64).sqrt();
    Ok((sqrt_n - l1 / l2) / (sqrt_n - 1.0))
}

/// L1 norm that a nonnegative vector with the given L2 norm has at sparsity `rho`.
pub fn l1_for_sparsity(n: usize, rho: f64, l2: f64) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    l2 * (sqrt_n - rho * (sqrt_n - 1.0))
}

/// Closest nonnegative vector with L2 norm `l2_target` and sparsity `rho`,
/// found by alternating projections onto the L1 hyperplane and the L2
/// sphere, clamping negatives to zero and repeating on the remaining support.
pub fn project_to_sparsity(w: &[f64], rho: f64, l2_target: f64) -> Result<Vec<f64>> {
    let n = w.len();
    if n < 2 {
        return Err(invalid("projection needs a vector of length at least 2"));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid(format!("target sparsity {rho} must lie strictly inside (0, 1)")));
    }
    if !(l2_target > 0.0) || !l2_target.is_finite() {
        return Err(invalid("target L2 norm must be positive"));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(invalid("projection of a non-finite vector"));
    }
    let k1 = l1_for_sparsity(n, rho, l2_target);
    let k2 = l2_target * l2_target;

    let shift = (k1 - w.iter().sum::<f64>()) / n as f64;
    let mut s: Vec<f64> = w.iter().map(|v| v + shift).collect();
    let mut zeroed = vec![false; n];
    loop {
        let free = zeroed.iter().filter(|z| !**z).count();
        let mid = k1 / free as f64;
        let m: Vec<f64> = zeroed.iter().map(|&z| if z { 0.0 } else { mid }).collect();
        let mut d: Vec<f64> = s.iter().zip(&m).map(|(a, b)| a - b).collect();
        let mut a: f64 = d.iter().map(|v| v * v).sum();
        if a <= f64::EPSILON * k2 {
            // s sits at the centre of the simplex face: no direction is
            // preferred, so move towards the first free coordinate
            d = zeroed
                .iter()
                .map(|&z| if z { 0.0 } else { -1.0 })
                .collect();
            let first = zeroed.iter().position(|z| !z).expect("a free coordinate");
            d[first] += free as f64;
            a = d.iter().map(|v| v * v).sum();
        }
        let b = 2.0 * m.iter().zip(&d).map(|(x, y)| x * y).sum::<f64>();
        let c = m.iter().map(|v| v * v).sum::<f64>() - k2;
        let alpha = (-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a);
        for i in 0..n {
            s[i] = m[i] + alpha * d[i];
        }
        if s.iter().all(|&v| v >= 0.0) {
            return Ok(s);
        }
        for i in 0..n {
            if s[i] < 0.0 {
                zeroed[i] = true;
            }
            if zeroed[i] {
                s[i] = 0.0;
            }
        }
        let free = zeroed.iter().filter(|z| !**z).count();
        let excess = (s.iter().sum::<f64>() - k1) / free as f64;
        for i in 0..n {
            if !zeroed[i] {
                s[i] -= excess;
            }
        }
    }
}
