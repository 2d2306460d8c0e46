//! Quadrature on the unit sphere, real spherical-harmonic transforms and the
//! `Δ₀ + 2/R²` solve used by the center and CMC constructions.
//!
//! Nodes are stored ring by ring: node `k = it * n_phi + ip` sits at colatitude
//! `θ_it` (Gauss–Legendre in `cos θ`) and longitude `φ_ip = 2π ip / n_phi`.
//! Harmonic `(l, m)` is stored at index `l² + l + m`.

mod legendre;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::error::{Error, Result};
use crate::Vec3;

pub use legendre::{tri, LegendreTable};

/// Absolute tolerance on the norm of the `l = 1` block accepted by
/// [`helmholtz_solve`] under [`L1Policy::Reject`].
pub const KERNEL_TOL: f64 = 1e-9;

/// Sums in a fixed binary-tree order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if v.len() <= LEAF {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes descending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Product Gauss–Legendre × uniform-longitude grid with precomputed Legendre tables.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    lmax: usize,
    n_theta: usize,
    n_phi: usize,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    ring_weights: Vec<f64>,
    phi: Vec<f64>,
    nodes: Vec<Vec3>,
    weights: Vec<f64>,
    tables: Vec<LegendreTable>,
    // cos(mφ), sin(mφ) for m = 0..=lmax, indexed [m * n_phi + ip]
    cos_mp: Vec<f64>,
    sin_mp: Vec<f64>,
}

/// Minimal grid resolving harmonics up to `lmax`.
pub fn build_grid(lmax: usize) -> Result<SphereGrid> {
    SphereGrid::with_resolution(lmax, lmax + 1, 2 * lmax + 2)
}

impl SphereGrid {
    /// Grid for band limit `lmax` with explicit ring and longitude counts.
    pub fn with_resolution(lmax: usize, n_theta: usize, n_phi: usize) -> Result<Self> {
        if lmax < 4 {
            return Err(Error::Config(format!("lmax = {lmax} must be at least 4")));
        }
        if n_theta < lmax + 1 || n_phi < 2 * lmax + 1 {
            return Err(Error::Config(format!(
                "grid {n_theta}x{n_phi} cannot resolve lmax = {lmax}"
            )));
        }
        let (x, w) = gauss_legendre(n_theta);
        let sin_theta: Vec<f64> = x.iter().map(|c| (1.0 - c * c).sqrt()).collect();
        let dphi = 2.0 * PI / n_phi as f64;
        let phi: Vec<f64> = (0..n_phi).map(|i| i as f64 * dphi).collect();
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for it in 0..n_theta {
            for &p in &phi {
                nodes.push(Vec3::new(sin_theta[it] * p.cos(), sin_theta[it] * p.sin(), x[it]));
                weights.push(w[it] * dphi);
            }
        }
        let tables = (0..n_theta)
            .into_par_iter()
            .map(|it| LegendreTable::new(lmax, x[it], sin_theta[it]))
            .collect();
        let mut cos_mp = vec![0.0; (lmax + 1) * n_phi];
        let mut sin_mp = vec![0.0; (lmax + 1) * n_phi];
        for m in 0..=lmax {
            for (ip, p) in phi.iter().enumerate() {
                let (s, c) = (m as f64 * p).sin_cos();
                cos_mp[m * n_phi + ip] = c;
                sin_mp[m * n_phi + ip] = s;
            }
        }
        Ok(SphereGrid {
            lmax,
            n_theta,
            n_phi,
            cos_theta: x,
            sin_theta,
            ring_weights: w,
            phi,
            nodes,
            weights,
            tables,
            cos_mp,
            sin_mp,
        })
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Unit vectors at the nodes.
    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    /// Quadrature weights; they sum to `4π`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(θ, φ)` of node `k`.
    pub fn angles(&self, k: usize) -> (f64, f64) {
        let it = k / self.n_phi;
        (self.cos_theta[it].acos(), self.phi[k % self.n_phi])
    }

    /// `(cos θ, sin θ, φ)` of node `k`.
    pub fn trig(&self, k: usize) -> (f64, f64, f64) {
        let it = k / self.n_phi;
        (self.cos_theta[it], self.sin_theta[it], self.phi[k % self.n_phi])
    }

    /// Longitude step `2π / n_phi`.
    pub fn dphi(&self) -> f64 {
        2.0 * PI / self.n_phi as f64
    }

    /// Gauss–Legendre weight of the ring containing node `k`.
    pub fn ring_weight(&self, k: usize) -> f64 {
        self.ring_weights[k / self.n_phi]
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.len() {
            return Err(Error::Input(format!(
                "{} values for a grid of {} nodes",
                n,
                self.len()
            )));
        }
        Ok(())
    }

    /// `Σ_k w_k v_k` with pairwise summation in node order.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values.len())?;
        let prod: Vec<f64> = self.weights.iter().zip(values).map(|(w, v)| w * v).collect();
        Ok(pairwise_sum(&prod))
    }

    /// Samples `f(ω)` at the nodes.
    pub fn sample<F: Fn(&Vec3) -> f64 + Sync + Send>(&self, f: F) -> Vec<f64> {
        self.nodes.par_iter().map(f).collect()
    }

    /// Real spherical-harmonic coefficients up to `lmax` by quadrature.
    pub fn sht_forward(&self, values: &[f64]) -> Result<HarmonicCoefficients> {
        self.check_len(values.len())?;
        let lmax = self.lmax;
        let np = self.n_phi;
        let dphi = self.dphi();
        // Per-ring Fourier sums, already multiplied by the ring weight.
        let rings: Vec<(Vec<f64>, Vec<f64>)> = (0..self.n_theta)
            .into_par_iter()
            .map(|it| {
                let row = &values[it * np..(it + 1) * np];
                let w = self.ring_weights[it] * dphi;
                let mut c = vec![0.0; lmax + 1];
                let mut s = vec![0.0; lmax + 1];
                for m in 0..=lmax {
                    let cm = &self.cos_mp[m * np..(m + 1) * np];
                    let sm = &self.sin_mp[m * np..(m + 1) * np];
                    c[m] = w * row.iter().zip(cm).map(|(f, t)| f * t).sum::<f64>();
                    s[m] = w * row.iter().zip(sm).map(|(f, t)| f * t).sum::<f64>();
                }
                (c, s)
            })
            .collect();
        let mut out = HarmonicCoefficients::zeros(lmax);
        let sq2 = 2f64.sqrt();
        for l in 0..=lmax {
            for m in 0..=l {
                let k = tri(l, m);
                let (mut ac, mut as_) = (0.0, 0.0);
                for (it, (c, s)) in rings.iter().enumerate() {
                    let p = self.tables[it].p[k];
                    ac += p * c[m];
                    as_ += p * s[m];
                }
                if m == 0 {
                    out.set(l, 0, ac);
                } else {
                    out.set(l, m as i64, sq2 * ac);
                    out.set(l, -(m as i64), sq2 * as_);
                }
            }
        }
        Ok(out)
    }

    /// Values at the nodes of the band-limited function with coefficients `c`.
    pub fn sht_inverse(&self, c: &HarmonicCoefficients) -> Result<Vec<f64>> {
        Ok(self.synthesize(c)?.f)
    }

    /// Values and angular derivatives at the nodes.
    pub fn synthesize(&self, c: &HarmonicCoefficients) -> Result<NodeDerivatives> {
        if c.lmax() > self.lmax {
            return Err(Error::Input(format!(
                "coefficients of degree {} exceed grid lmax {}",
                c.lmax(),
                self.lmax
            )));
        }
        let lmax = c.lmax();
        let np = self.n_phi;
        let sq2 = 2f64.sqrt();
        let rings: Vec<[Vec<f64>; 6]> = (0..self.n_theta)
            .into_par_iter()
            .map(|it| {
                let tab = &self.tables[it];
                // Per-m cos/sin amplitudes of P̄, dP̄, ddP̄.
                let mut amp = vec![[0.0f64; 6]; lmax + 1];
                for l in 0..=lmax {
                    for m in 0..=l {
                        let k = tri(l, m);
                        let (a_c, a_s) = if m == 0 {
                            (c.get(l, 0), 0.0)
                        } else {
                            (sq2 * c.get(l, m as i64), sq2 * c.get(l, -(m as i64)))
                        };
                        let e = &mut amp[m];
                        e[0] += a_c * tab.p[k];
                        e[1] += a_s * tab.p[k];
                        e[2] += a_c * tab.dp[k];
                        e[3] += a_s * tab.dp[k];
                        e[4] += a_c * tab.ddp[k];
                        e[5] += a_s * tab.ddp[k];
                    }
                }
                let mut out: [Vec<f64>; 6] = Default::default();
                for v in out.iter_mut() {
                    *v = vec![0.0; np];
                }
                for ip in 0..np {
                    let mut acc = [0.0; 6];
                    for (m, e) in amp.iter().enumerate() {
                        let cs = self.cos_mp[m * np + ip];
                        let sn = self.sin_mp[m * np + ip];
                        let mf = m as f64;
                        acc[0] += e[0] * cs + e[1] * sn;
                        acc[1] += e[2] * cs + e[3] * sn;
                        acc[2] += mf * (-e[0] * sn + e[1] * cs);
                        acc[3] += e[4] * cs + e[5] * sn;
                        acc[4] += mf * (-e[2] * sn + e[3] * cs);
                        acc[5] += -mf * mf * (e[0] * cs + e[1] * sn);
                    }
                    for q in 0..6 {
                        out[q][ip] = acc[q];
                    }
                }
                out
            })
            .collect();
        let n = self.len();
        let mut d = NodeDerivatives {
            f: Vec::with_capacity(n),
            f_t: Vec::with_capacity(n),
            f_p: Vec::with_capacity(n),
            f_tt: Vec::with_capacity(n),
            f_tp: Vec::with_capacity(n),
            f_pp: Vec::with_capacity(n),
        };
        for r in rings {
            d.f.extend_from_slice(&r[0]);
            d.f_t.extend_from_slice(&r[1]);
            d.f_p.extend_from_slice(&r[2]);
            d.f_tt.extend_from_slice(&r[3]);
            d.f_tp.extend_from_slice(&r[4]);
            d.f_pp.extend_from_slice(&r[5]);
        }
        Ok(d)
    }
}

/// Harmonics `Y_a` (`a = l² + l + m`, `l ≤ lb`) and their first angular
/// derivatives tabulated at the nodes, stored node-major: `[k * n_basis + a]`.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub n_basis: usize,
    pub y: Vec<f64>,
    pub y_t: Vec<f64>,
    pub y_p: Vec<f64>,
}

impl SphereGrid {
    pub fn basis_table(&self, lb: usize) -> Result<BasisTable> {
        if lb > self.lmax {
            return Err(Error::Input(format!(
                "basis degree {lb} exceeds grid lmax {}",
                self.lmax
            )));
        }
        let nb = (lb + 1) * (lb + 1);
        let n = self.len();
        let (mut y, mut y_t, mut y_p) = (vec![0.0; n * nb], vec![0.0; n * nb], vec![0.0; n * nb]);
        let sq2 = 2f64.sqrt();
        let np = self.n_phi;
        y.par_chunks_mut(nb)
            .zip(y_t.par_chunks_mut(nb))
            .zip(y_p.par_chunks_mut(nb))
            .enumerate()
            .for_each(|(k, ((yk, ytk), ypk))| {
                let tab = &self.tables[k / np];
                let ip = k % np;
                for l in 0..=lb {
                    let i0 = idx(l, 0);
                    yk[i0] = tab.p[tri(l, 0)];
                    ytk[i0] = tab.dp[tri(l, 0)];
                    for m in 1..=l {
                        let (c, s) = (self.cos_mp[m * np + ip], self.sin_mp[m * np + ip]);
                        let (p, dp) = (sq2 * tab.p[tri(l, m)], sq2 * tab.dp[tri(l, m)]);
                        let mf = m as f64;
                        let (ic, is) = (idx(l, m as i64), idx(l, -(m as i64)));
                        yk[ic] = p * c;
                        ytk[ic] = dp * c;
                        ypk[ic] = -mf * p * s;
                        yk[is] = p * s;
                        ytk[is] = dp * s;
                        ypk[is] = mf * p * c;
                    }
                }
            });
        Ok(BasisTable {
            n_basis: nb,
            y,
            y_t,
            y_p,
        })
    }
}

/// Values of a field and its first and second `(θ, φ)` derivatives at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeDerivatives {
    pub f: Vec<f64>,
    pub f_t: Vec<f64>,
    pub f_p: Vec<f64>,
    pub f_tt: Vec<f64>,
    pub f_tp: Vec<f64>,
    pub f_pp: Vec<f64>,
}

/// Real orthonormal spherical-harmonic coefficients `a[l][m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicCoefficients {
    lmax: usize,
    a: Vec<f64>,
}

#[inline]
fn idx(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

impl HarmonicCoefficients {
    pub fn zeros(lmax: usize) -> Self {
        HarmonicCoefficients {
            lmax,
            a: vec![0.0; (lmax + 1) * (lmax + 1)],
        }
    }

    /// Builds from a flat vector in `l² + l + m` order.
    pub fn from_flat(lmax: usize, a: Vec<f64>) -> Result<Self> {
        if a.len() != (lmax + 1) * (lmax + 1) {
            return Err(Error::Input(format!(
                "{} coefficients do not match lmax = {lmax}",
                a.len()
            )));
        }
        Ok(HarmonicCoefficients { lmax, a })
    }

    /// A single harmonic `Y_lm` with unit coefficient.
    pub fn single(lmax: usize, l: usize, m: i64) -> Self {
        let mut c = Self::zeros(lmax);
        c.set(l, m, 1.0);
        c
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        assert!(l <= self.lmax && m.unsigned_abs() as usize <= l);
        self.a[idx(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, v: f64) {
        assert!(l <= self.lmax && m.unsigned_abs() as usize <= l);
        self.a[idx(l, m)] = v;
    }

    /// The `l = 1` block as the Cartesian vector `(a_x, a_y, a_z)`:
    /// `Y_11 ∝ x`, `Y_1,-1 ∝ y`, `Y_10 ∝ z`.
    pub fn l1_vector(&self) -> [f64; 3] {
        if self.lmax < 1 {
            return [0.0; 3];
        }
        [self.get(1, 1), self.get(1, -1), self.get(1, 0)]
    }

    pub fn set_l1_vector(&mut self, v: [f64; 3]) {
        self.set(1, 1, v[0]);
        self.set(1, -1, v[1]);
        self.set(1, 0, v[2]);
    }

    /// Euclidean norm of the coefficients of degree `l`.
    pub fn block_norm(&self, l: usize) -> f64 {
        let s = idx(l, -(l as i64));
        self.a[s..s + 2 * l + 1].iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Copy truncated or zero-padded to degree `lmax`.
    pub fn resized(&self, lmax: usize) -> Self {
        let mut out = Self::zeros(lmax);
        let n = out.a.len().min(self.a.len());
        out.a[..n].copy_from_slice(&self.a[..n]);
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        HarmonicCoefficients {
            lmax: self.lmax,
            a: self.a.iter().map(|v| v * s).collect(),
        }
    }

    /// `self + s · other` (degrees padded to the larger of the two).
    pub fn add_scaled(&self, other: &Self, s: f64) -> Self {
        let lmax = self.lmax.max(other.lmax);
        let mut out = self.resized(lmax);
        for (o, v) in out.a.iter_mut().zip(&other.a) {
            *o += s * v;
        }
        out
    }

    /// Rows `a[l][0..2l+1]` ordered `m = −l..l`.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..=self.lmax)
            .map(|l| self.a[idx(l, -(l as i64))..=idx(l, l as i64)].to_vec())
            .collect()
    }

    /// Evaluates the expansion in an arbitrary direction.
    pub fn evaluate(&self, w: &Vec3) -> f64 {
        let n = w.norm();
        let ct = (w.z / n).clamp(-1.0, 1.0);
        let st = (1.0 - ct * ct).sqrt();
        let phi = w.y.atan2(w.x);
        let tab = LegendreTable::new(self.lmax, ct, st.max(1e-300));
        let sq2 = 2f64.sqrt();
        let mut s = 0.0;
        for l in 0..=self.lmax {
            s += self.get(l, 0) * tab.p[tri(l, 0)];
            for m in 1..=l {
                let (sn, cs) = (m as f64 * phi).sin_cos();
                let p = sq2 * tab.p[tri(l, m)];
                s += p * (self.get(l, m as i64) * cs + self.get(l, -(m as i64)) * sn);
            }
        }
        s
    }
}

impl Serialize for HarmonicCoefficients {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows = self.rows();
        let mut seq = s.serialize_seq(Some(rows.len()))?;
        for r in &rows {
            seq.serialize_element(r)?;
        }
        seq.end()
    }
}

/// Handling of the `l = 1` kernel of `Δ₀ + 2` in [`helmholtz_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L1Policy {
    /// Fail with [`Error::KernelObstruction`] when the `l = 1` block exceeds the tolerance.
    Reject,
    /// Drop the `l = 1` block.
    ProjectOut,
}

/// Solves `(Δ₀ + 2)/R² ψ = rhs` degree by degree. The `l = 1` block of the
/// result is zero.
pub fn helmholtz_solve(rhs: &HarmonicCoefficients, r: f64, policy: L1Policy) -> Result<HarmonicCoefficients> {
    helmholtz_solve_with_tol(rhs, r, policy, KERNEL_TOL)
}

pub fn helmholtz_solve_with_tol(
    rhs: &HarmonicCoefficients,
    r: f64,
    policy: L1Policy,
    kernel_tol: f64,
) -> Result<HarmonicCoefficients> {
    if !(r > 0.0) {
        return Err(Error::Input(format!("radius {r} must be positive")));
    }
    if policy == L1Policy::Reject && rhs.lmax >= 1 && rhs.block_norm(1) > kernel_tol {
        return Err(Error::KernelObstruction {
            projection: rhs.l1_vector(),
            tol: kernel_tol,
        });
    }
    let mut out = HarmonicCoefficients::zeros(rhs.lmax);
    for l in 0..=rhs.lmax {
        if l == 1 {
            continue;
        }
        let ev = (2.0 - (l * (l + 1)) as f64) / (r * r);
        for m in -(l as i64)..=(l as i64) {
            out.set(l, m, rhs.get(l, m) / ev);
        }
    }
    Ok(out)
}

/// Applies `(Δ₀ + 2)/R²` in coefficient space.
pub fn helmholtz_apply(c: &HarmonicCoefficients, r: f64) -> HarmonicCoefficients {
    let mut out = HarmonicCoefficients::zeros(c.lmax);
    for l in 0..=c.lmax {
        let ev = (2.0 - (l * (l + 1)) as f64) / (r * r);
        for m in -(l as i64)..=(l as i64) {
            out.set(l, m, c.get(l, m) * ev);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m12: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((m12 - 2.0 / 13.0).abs() < 1e-14);
    }

    #[test]
    fn small_lmax_rejected() {
        assert!(matches!(build_grid(3), Err(Error::Config(_))));
    }

    #[test]
    fn weights_sum_to_sphere_area() {
        let g = build_grid(8).unwrap();
        let s = g.integrate(&vec![1.0; g.len()]).unwrap();
        assert!((s - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn size_mismatch() {
        let g = build_grid(4).unwrap();
        assert!(matches!(g.integrate(&[1.0, 2.0]), Err(Error::Input(_))));
        assert!(matches!(g.sht_forward(&[1.0]), Err(Error::Input(_))));
    }

    #[test]
    fn coordinate_functions_are_degree_one() {
        let g = build_grid(6).unwrap();
        let c = g.sht_forward(&g.sample(|w| w.z)).unwrap();
        let k = (4.0 * PI / 3.0f64).sqrt();
        assert!((c.get(1, 0) - k).abs() < 1e-13);
        assert!((c.norm() - k).abs() < 1e-13);
        let cx = g.sht_forward(&g.sample(|w| w.x)).unwrap().l1_vector();
        assert!((cx[0] - k).abs() < 1e-13 && cx[1].abs() < 1e-13 && cx[2].abs() < 1e-13);
        let cy = g.sht_forward(&g.sample(|w| w.y)).unwrap().l1_vector();
        assert!((cy[1] - k).abs() < 1e-13);
    }

    #[test]
    fn helmholtz_examples() {
        let r = 10.0;
        let y00 = HarmonicCoefficients::single(4, 0, 0);
        let s = helmholtz_solve(&y00, r, L1Policy::Reject).unwrap();
        assert!((s.get(0, 0) - r * r / 2.0).abs() < 1e-12);
        let y2 = HarmonicCoefficients::single(4, 2, -1);
        let s = helmholtz_solve(&y2, r, L1Policy::Reject).unwrap();
        assert!((s.get(2, -1) + r * r / 4.0).abs() < 1e-12);
        let y1 = HarmonicCoefficients::single(4, 1, 0);
        match helmholtz_solve(&y1, r, L1Policy::Reject) {
            Err(Error::KernelObstruction { projection, .. }) => assert_eq!(projection, [0.0, 0.0, 1.0]),
            other => panic!("{other:?}"),
        }
        let s = helmholtz_solve(&y1, r, L1Policy::ProjectOut).unwrap();
        assert_eq!(s.norm(), 0.0);
    }

    #[test]
    fn angular_derivatives_of_y21() {
        // Y_21 ∝ sinθ cosθ cosφ
        let g = build_grid(6).unwrap();
        let c = HarmonicCoefficients::single(6, 2, 1);
        let d = g.synthesize(&c).unwrap();
        let k = d.f[3] / {
            let (ct, st, p) = g.trig(3);
            st * ct * p.cos()
        };
        for i in 0..g.len() {
            let (ct, st, p) = g.trig(i);
            let (cp, sp) = (p.cos(), p.sin());
            let c2 = ct * ct - st * st;
            assert!((d.f[i] - k * st * ct * cp).abs() < 1e-13);
            assert!((d.f_t[i] - k * c2 * cp).abs() < 1e-13);
            assert!((d.f_p[i] + k * st * ct * sp).abs() < 1e-13);
            assert!((d.f_tt[i] + 4.0 * k * st * ct * cp).abs() < 1e-12);
            assert!((d.f_tp[i] + k * c2 * sp).abs() < 1e-13);
            assert!((d.f_pp[i] + k * st * ct * cp).abs() < 1e-13);
        }
    }

    #[test]
    fn pointwise_evaluation_matches_nodes() {
        let g = build_grid(5).unwrap();
        let mut c = HarmonicCoefficients::zeros(5);
        c.set(3, -2, 0.4);
        c.set(5, 5, -1.1);
        c.set(0, 0, 0.3);
        let v = g.sht_inverse(&c).unwrap();
        for k in [0, 7, 30, g.len() - 1] {
            assert!((c.evaluate(&g.nodes()[k]) - v[k]).abs() < 1e-13);
        }
    }
}
