//! Fully normalized associated Legendre functions and their θ-derivatives.
//!
//! `P̄_lm` is normalized so that `Y_l0 = P̄_l0(cos θ)` and
//! `Y_l,±m = √2 P̄_lm(cos θ) {cos, sin}(mφ)` are orthonormal on the unit sphere.
//! No Condon–Shortley phase.

use std::f64::consts::PI;

/// Index of `(l, m)`, `0 ≤ m ≤ l`, in triangular storage.
#[inline]
pub fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

pub fn tri_len(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 2) / 2
}

/// `P̄_lm`, `dP̄_lm/dθ` and `d²P̄_lm/dθ²` at one colatitude.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub ddp: Vec<f64>,
}

impl LegendreTable {
    /// Requires `sin θ > 0`.
    pub fn new(lmax: usize, cos_t: f64, sin_t: f64) -> Self {
        let n = tri_len(lmax);
        let mut p = vec![0.0; n];
        p[0] = 1.0 / (4.0 * PI).sqrt();
        for m in 1..=lmax {
            let mf = m as f64;
            p[tri(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_t * p[tri(m - 1, m - 1)];
        }
        for m in 0..lmax {
            p[tri(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * cos_t * p[tri(m, m)];
        }
        for m in 0..=lmax {
            for l in (m + 2)..=lmax {
                let (lf, mf) = (l as f64, m as f64);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let l1 = lf - 1.0;
                let b = ((l1 * l1 - mf * mf) / (4.0 * l1 * l1 - 1.0)).sqrt();
                p[tri(l, m)] = a * (cos_t * p[tri(l - 1, m)] - b * p[tri(l - 2, m)]);
            }
        }
        let mut dp = vec![0.0; n];
        let mut ddp = vec![0.0; n];
        let cot = cos_t / sin_t;
        for l in 0..=lmax {
            let lf = l as f64;
            for m in 0..=l {
                let mf = m as f64;
                let prev = if l > m {
                    ((lf * lf - mf * mf) * (2.0 * lf + 1.0) / (2.0 * lf - 1.0)).sqrt()
                        * p[tri(l - 1, m)]
                } else {
                    0.0
                };
                let k = tri(l, m);
                dp[k] = (lf * cos_t * p[k] - prev) / sin_t;
                ddp[k] = -cot * dp[k] - (lf * (lf + 1.0) - mf * mf / (sin_t * sin_t)) * p[k];
            }
        }
        LegendreTable { p, dp, ddp }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degree_closed_forms() {
        let t: f64 = 0.7;
        let tab = LegendreTable::new(2, t.cos(), t.sin());
        let c = 1.0 / (4.0 * PI).sqrt();
        assert!((tab.p[tri(1, 0)] - 3f64.sqrt() * c * t.cos()).abs() < 1e-15);
        assert!((tab.dp[tri(1, 0)] + 3f64.sqrt() * c * t.sin()).abs() < 1e-15);
        // P̄_11 = √(3/2) c sin θ
        assert!((tab.p[tri(1, 1)] - 1.5f64.sqrt() * c * t.sin()).abs() < 1e-15);
        // P̄_20 = √5 c (3cos² − 1)/2
        let p20 = 5f64.sqrt() * c * (3.0 * t.cos().powi(2) - 1.0) / 2.0;
        assert!((tab.p[tri(2, 0)] - p20).abs() < 1e-15);
        let dd20 = 5f64.sqrt() * c * (-3.0 * (2.0 * t).cos());
        assert!((tab.ddp[tri(2, 0)] - dd20).abs() < 1e-13);
    }
}
