//! Discrete tori Λ = ℤ^d / Pℤ^d, the lattice Laplacian and scale bookkeeping
//! (coalescence scale, mass scale, χ-factors).

use alloc::vec::Vec;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Discrete torus of side `P` in dimension `d`. Sites are indexed
/// row-major: the last coordinate varies fastest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusLattice {
    dim: usize,
    side: usize,
    sites: usize,
}

impl TorusLattice {
    /// Torus of side `L^N` (`L ≥ 2`, `N ≥ 1`).
    pub fn new(d: usize, l: usize, n: u32) -> Result<Self> {
        if l < 2 {
            return Err(invalid(alloc::format!("block factor L must be >= 2, got {l}")));
        }
        if n < 1 {
            return Err(invalid("volume exponent N must be >= 1"));
        }
        let side = l
            .checked_pow(n)
            .ok_or_else(|| invalid("torus side L^N overflows"))?;
        Self::with_side(d, side)
    }

    /// Torus of arbitrary side `P ≥ 1`. Small sides (1, 2, 3) are used by
    /// the exact tiny-volume oracles.
    pub fn with_side(d: usize, side: usize) -> Result<Self> {
        if d < 1 {
            return Err(invalid("dimension must be >= 1"));
        }
        if side < 1 {
            return Err(invalid("torus side must be >= 1"));
        }
        let sites = (0..d)
            .try_fold(1usize, |acc, _| acc.checked_mul(side))
            .ok_or_else(|| invalid("torus volume overflows"))?;
        Ok(TorusLattice { dim: d, side, sites })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn num_sites(&self) -> usize {
        self.sites
    }

    /// Coordinates of `site`, each in `0..P`.
    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut c = alloc::vec![0; self.dim];
        let mut s = site;
        for i in (0..self.dim).rev() {
            c[i] = s % self.side;
            s /= self.side;
        }
        c
    }

    /// Site index of integer coordinates, reduced mod `P`.
    pub fn site(&self, coords: &[i64]) -> usize {
        assert_eq!(coords.len(), self.dim);
        let p = self.side as i64;
        coords
            .iter()
            .fold(0usize, |acc, &x| acc * self.side + x.rem_euclid(p) as usize)
    }

    /// The `2d` nearest neighbours of `site`, repeated according to
    /// multiplicity on small tori (side 1 or 2).
    pub fn neighbours(&self, site: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * self.dim);
        let mut stride = 1usize;
        let p = self.side;
        for _ in 0..self.dim {
            let ci = (site / stride) % p;
            let up = (ci + 1) % p;
            let down = (ci + p - 1) % p;
            out.push(site - ci * stride + up * stride);
            out.push(site - ci * stride + down * stride);
            stride *= p;
        }
        out
    }

    /// Minimal-image displacement `b - a`, each coordinate in `(-P/2, P/2]`.
    pub fn displacement(&self, a: usize, b: usize) -> Vec<i64> {
        let ca = self.coords(a);
        let cb = self.coords(b);
        let p = self.side as i64;
        ca.iter()
            .zip(&cb)
            .map(|(&x, &y)| {
                let mut d = (y as i64 - x as i64).rem_euclid(p);
                if 2 * d > p {
                    d -= p;
                }
                d
            })
            .collect()
    }

    /// Squared torus distance |a - b|².
    pub fn distance2(&self, a: usize, b: usize) -> u128 {
        self.displacement(a, b)
            .iter()
            .map(|&x| (x as i128 * x as i128) as u128)
            .sum()
    }

    /// `(Δf)_x = Σ_{y~x} (f_y - f_x)` with neighbour multiplicity.
    pub fn laplacian_apply(&self, f: &[f64], out: &mut [f64]) {
        assert_eq!(f.len(), self.sites);
        assert_eq!(out.len(), self.sites);
        for x in 0..self.sites {
            let fx = f[x];
            out[x] = self.neighbours(x).iter().map(|&y| f[y] - fx).sum();
        }
    }

    /// Adjacency matrix counting neighbour multiplicity (row sums `2d`).
    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.sites, self.sites);
        for x in 0..self.sites {
            for y in self.neighbours(x) {
                j[(x, y)] += 1.0;
            }
        }
        j
    }

    /// Dense Laplacian `J - 2d·I`.
    pub fn laplacian_matrix(&self) -> DMatrix<f64> {
        let mut m = self.adjacency_matrix();
        for x in 0..self.sites {
            m[(x, x)] -= 2.0 * self.dim as f64;
        }
        m
    }
}

/// `L^k` as an exact integer when it fits.
fn pow_u128(l: u64, k: u32) -> Option<u128> {
    (l as u128).checked_pow(k)
}

/// Coalescence scale `⌊log_L(2|a-b|)⌋` from the squared distance `|a-b|²`;
/// `0` when `a = b`. Computed in integer arithmetic: the largest `j` with
/// `L^{2j} ≤ 4|a-b|²`.
pub fn coalescence_scale(l: u64, dist2: u128) -> Result<u32> {
    if l < 2 {
        return Err(invalid("block factor L must be >= 2"));
    }
    if dist2 == 0 {
        return Ok(0);
    }
    let four_r2 = dist2
        .checked_mul(4)
        .ok_or_else(|| invalid("distance too large"))?;
    let mut j = 0u32;
    while let Some(p) = pow_u128(l, 2 * (j + 1)) {
        if p > four_r2 {
            break;
        }
        j += 1;
    }
    Ok(j)
}

/// Coalescence scale along a coordinate axis at distance `r`.
pub fn coalescence_scale_axis(l: u64, r: u64) -> Result<u32> {
    coalescence_scale(l, (r as u128) * (r as u128))
}

/// Mass scale: the largest `j` with `√m² · L^j ≤ 1`; `None` (infinite)
/// when `m² = 0`. Negative when `m² > 1`.
pub fn mass_scale(l: u64, m2: f64) -> Result<Option<i32>> {
    if l < 2 {
        return Err(invalid("block factor L must be >= 2"));
    }
    if !(m2 >= 0.0) || !m2.is_finite() {
        return Err(invalid("m2 must be finite and >= 0"));
    }
    if m2 == 0.0 {
        return Ok(None);
    }
    // m² L^{2j} ≤ 1, compared on the squared quantity to avoid sqrt rounding.
    let lf = l as f64;
    let mut j: i32 = (-0.5 * libm::log(m2) / libm::log(lf)) as i32 + 1;
    let holds = |j: i32| m2 * libm::pow(lf, 2.0 * j as f64) <= 1.0;
    while !holds(j) {
        j -= 1;
    }
    while holds(j + 1) {
        j += 1;
    }
    Ok(Some(j))
}

/// Scale bookkeeping for a pair of observation points and a mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleGeometry {
    pub l: u64,
    /// Coalescence scale; `None` means infinite (star / one-point case).
    pub j_ab: Option<u32>,
    /// Mass scale; `None` means infinite (`m² = 0`).
    pub j_m: Option<i32>,
    /// Decay base of the χ-factors.
    pub omega: f64,
}

impl ScaleGeometry {
    pub fn new(l: u64, j_ab: Option<u32>, m2: f64, omega: f64) -> Result<Self> {
        if !(omega > 1.0) {
            return Err(invalid("omega must be > 1"));
        }
        Ok(ScaleGeometry { l, j_ab, j_m: mass_scale(l, m2)?, omega })
    }

    /// `χ_j = Ω^{-(j - j_m)_+}`.
    pub fn chi(&self, j: u32) -> f64 {
        chi_factor(self.omega, j, self.j_m)
    }
}

/// `Ω^{-(j - j_m)_+}`; identically 1 when `j_m` is infinite.
pub fn chi_factor(omega: f64, j: u32, j_m: Option<i32>) -> f64 {
    match j_m {
        None => 1.0,
        Some(jm) => {
            let excess = j as i64 - jm as i64;
            if excess <= 0 {
                1.0
            } else {
                libm::pow(omega, -(excess as f64))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_torus_has_double_neighbour() {
        let t = TorusLattice::with_side(1, 2).unwrap();
        assert_eq!(t.neighbours(0), alloc::vec![1, 1]);
        let f = [3.0, 5.0];
        let mut out = [0.0; 2];
        t.laplacian_apply(&f, &mut out);
        assert_eq!(out, [4.0, -4.0]);
    }

    #[test]
    fn one_site_torus_laplacian_vanishes() {
        let t = TorusLattice::with_side(4, 1).unwrap();
        let mut out = [1.0];
        t.laplacian_apply(&[7.0], &mut out);
        assert_eq!(out, [0.0]);
    }

    #[test]
    fn row_major_indexing_roundtrip() {
        let t = TorusLattice::new(3, 2, 2).unwrap();
        assert_eq!(t.num_sites(), 64);
        assert_eq!(t.site(&[0, 0, 1]), 1);
        assert_eq!(t.site(&[1, 0, 0]), 16);
        for s in 0..64 {
            let c: Vec<i64> = t.coords(s).iter().map(|&x| x as i64).collect();
            assert_eq!(t.site(&c), s);
        }
        assert_eq!(t.site(&[-1, 4, 5]), t.site(&[3, 0, 1]));
    }

    #[test]
    fn displacement_window() {
        let t = TorusLattice::with_side(1, 4).unwrap();
        assert_eq!(t.displacement(0, 2), alloc::vec![2]);
        assert_eq!(t.displacement(0, 3), alloc::vec![-1]);
        assert_eq!(t.displacement(2, 0), alloc::vec![2]);
        let t = TorusLattice::with_side(1, 3).unwrap();
        assert_eq!(t.displacement(0, 2), alloc::vec![-1]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(TorusLattice::new(4, 1, 3).is_err());
        assert!(TorusLattice::new(4, 2, 0).is_err());
        assert!(TorusLattice::with_side(0, 3).is_err());
    }

    #[test]
    fn coalescence_examples() {
        assert_eq!(coalescence_scale_axis(2, 1).unwrap(), 1);
        assert_eq!(coalescence_scale_axis(2, 4).unwrap(), 3);
        assert_eq!(coalescence_scale_axis(2, 0).unwrap(), 0);
        for j in 1..60u32 {
            // |a-b| = 2^{j-1} sits exactly on the boundary.
            assert_eq!(coalescence_scale_axis(2, 1u64 << (j - 1)).unwrap(), j);
            if j >= 2 {
                assert_eq!(coalescence_scale_axis(2, (1u64 << (j - 1)) + 1).unwrap(), j);
            }
        }
        assert_eq!(coalescence_scale_axis(3, 5).unwrap(), 2);
    }

    #[test]
    fn mass_scale_examples() {
        assert_eq!(mass_scale(2, 0.01).unwrap(), Some(3));
        assert_eq!(mass_scale(2, 0.0).unwrap(), None);
        assert_eq!(mass_scale(2, 1.0).unwrap(), Some(0));
        assert_eq!(mass_scale(2, 0.25).unwrap(), Some(1));
        assert_eq!(mass_scale(2, 4.0).unwrap(), Some(-1));
        assert_eq!(mass_scale(3, 1.0 / 81.0).unwrap(), Some(2));
    }

    #[test]
    fn chi_factors() {
        assert_eq!(chi_factor(2.0, 5, None), 1.0);
        assert_eq!(chi_factor(2.0, 5, Some(3)), 0.25);
        assert_eq!(chi_factor(2.0, 2, Some(3)), 1.0);
    }
}
