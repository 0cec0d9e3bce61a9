//! Directional 3x3 Sobel edge maps on sections.
//!
//! Kernel row `a` pairs with the neighbor at row offset `1 - a` and kernel
//! column `b` with column offset `b - 1`, i.e. kernels are written with the
//! row axis pointing up. With this convention the 45° kernel is blind to a
//! ramp rising along `row + col`, which the -45° kernel picks up at full strength.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::volume::Section2D;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SobelAngle {
    #[serde(rename = "0")]
    Deg0,
    #[serde(rename = "45")]
    Deg45,
    #[serde(rename = "90")]
    Deg90,
    #[serde(rename = "-45")]
    DegMinus45,
}

impl std::str::FromStr for SobelAngle {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(SobelAngle::Deg0),
            "45" => Ok(SobelAngle::Deg45),
            "90" => Ok(SobelAngle::Deg90),
            "-45" => Ok(SobelAngle::DegMinus45),
            other => Err(invalid(format!("Sobel angle must be 0, 45, 90 or -45, got {other}"))),
        }
    }
}

pub fn sobel_kernel(angle: SobelAngle) -> [[f64; 3]; 3] {
    match angle {
        SobelAngle::Deg0 => [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]],
        SobelAngle::Deg45 => [[-2.0, -1.0, 0.0], [-1.0, 0.0, 1.0], [0.0, 1.0, 2.0]],
        SobelAngle::Deg90 => [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]],
        SobelAngle::DegMinus45 => [[0.0, -1.0, -2.0], [1.0, 0.0, -1.0], [2.0, 1.0, 0.0]],
    }
}

/// Correlation of the section with one kernel, replicate-padded. Row-major output.
pub fn sobel_directional(section: &Section2D, angle: SobelAngle) -> Result<Vec<f64>> {
    let (rows, cols) = section.shape();
    if rows < 3 || cols < 3 {
        return Err(invalid(format!(
            "Sobel filtering needs a section of at least 3x3, got {rows}x{cols}"
        )));
    }
    let k = sobel_kernel(angle);
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows as isize {
        for c in 0..cols as isize {
            let mut acc = 0.0;
            for (a, krow) in k.iter().enumerate() {
                for (b, &w) in krow.iter().enumerate() {
                    if w != 0.0 {
                        acc += w * section.get_clamped(r + 1 - a as isize, c + b as isize - 1) as f64;
                    }
                }
            }
            out.push(acc);
        }
    }
    Ok(out)
}

/// `sqrt(sum of squared responses)` over the requested angles.
pub fn sobel_magnitude(section: &Section2D, angles: &[SobelAngle]) -> Result<Vec<f64>> {
    if angles.is_empty() {
        return Err(invalid("at least one Sobel angle is required"));
    }
    let mut acc = vec![0.0; section.rows() * section.cols()];
    for &a in angles {
        for (s, v) in acc.iter_mut().zip(sobel_directional(section, a)?) {
            *s += v * v;
        }
    }
    acc.iter_mut().for_each(|v| *v = v.sqrt());
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [SobelAngle; 4] = [
        SobelAngle::Deg0,
        SobelAngle::Deg45,
        SobelAngle::Deg90,
        SobelAngle::DegMinus45,
    ];

    #[test]
    fn kernels_sum_to_zero() {
        for a in ALL {
            let s: f64 = sobel_kernel(a).iter().flatten().sum();
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn constant_section_gives_zero() {
        let s = Section2D::from_fn(5, 6, |_, _| 3.0);
        for a in ALL {
            assert!(sobel_directional(&s, a).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn diagonal_ramp() {
        let s = Section2D::from_fn(6, 6, |r, c| (r + c) as f32);
        let p45 = sobel_directional(&s, SobelAngle::Deg45).unwrap();
        let m45 = sobel_directional(&s, SobelAngle::DegMinus45).unwrap();
        for r in 1..5 {
            for c in 1..5 {
                assert_eq!(p45[r * 6 + c], 0.0);
                assert_eq!(m45[r * 6 + c].abs(), 12.0);
            }
        }
        // 12 is the largest response any kernel gives to a unit-slope ramp
        for a in ALL {
            let v = sobel_directional(&s, a).unwrap();
            assert!(v[2 * 6 + 2].abs() <= 12.0);
        }
    }

    #[test]
    fn diagonal_step_edge_peaks_on_the_diagonal() {
        let n = 9;
        let s = Section2D::from_fn(n, n, |r, c| if r + c >= n { 1.0 } else { 0.0 });
        let m = sobel_directional(&s, SobelAngle::DegMinus45).unwrap();
        // brute-force correlation at a few pixels
        let k = sobel_kernel(SobelAngle::DegMinus45);
        for r in 1..n - 1 {
            for c in 1..n - 1 {
                let mut acc = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        acc += k[a][b] * s.get(r + 1 - a, c + b - 1) as f64;
                    }
                }
                assert_eq!(acc, m[r * n + c]);
            }
        }
        let peak = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for r in 1..n - 1 {
            for c in 1..n - 1 {
                let on = r + c == n - 1 || r + c == n;
                if m[r * n + c].abs() == peak {
                    assert!(on, "peak off the planted diagonal at ({r},{c})");
                }
            }
        }
    }

    #[test]
    fn too_small() {
        let s = Section2D::from_fn(2, 5, |_, _| 0.0);
        assert!(sobel_directional(&s, SobelAngle::Deg0).is_err());
    }
}
