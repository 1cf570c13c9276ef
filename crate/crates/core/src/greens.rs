//! Lattice Green functions `G = (-Δ + m²)^{-1}`.
//!
//! Three independent routes are provided: dense inversion on tori, Fourier
//! quadrature on ℤ^d, and the heat-kernel time integral
//! `G_{0x} = ∫_0^∞ e^{-m²t} Π_i e^{-2t} I_{x_i}(2t) dt`. The walk side is
//! covered by the Neumann series over nearest-neighbour paths and a killed
//! random-walk Monte Carlo.

use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::lattice::TorusLattice;
use crate::models::mc::{chain_rng, exponential, split_samples, McEstimate, Tally};
use crate::quad::{integrate, GaussLegendre};
use crate::special::bessel_i_scaled;

/// A value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenValue {
    pub value: f64,
    pub abs_err: f64,
}

/// Green function values, either on a whole torus or on a set of ℤ^d
/// displacements. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum GreenTable {
    Torus { lattice: TorusLattice, m2: f64, matrix: DMatrix<f64> },
    Zd { d: usize, m2: f64, points: Vec<(Vec<i64>, GreenValue)> },
}

impl GreenTable {
    /// `G_{ab}` on a torus table.
    pub fn torus_entry(&self, a: usize, b: usize) -> Option<f64> {
        match self {
            GreenTable::Torus { matrix, .. } => Some(matrix[(a, b)]),
            GreenTable::Zd { .. } => None,
        }
    }

    /// `G_{0x}` on a ℤ^d table, using reflection and permutation symmetry.
    pub fn zd_entry(&self, x: &[i64]) -> Option<f64> {
        match self {
            GreenTable::Zd { points, .. } => {
                let key = canonical(x);
                points.iter().find(|(p, _)| *p == key).map(|(_, v)| v.value)
            }
            GreenTable::Torus { .. } => None,
        }
    }
}

/// Sorted absolute coordinates: the symmetry-class representative.
pub fn canonical(x: &[i64]) -> Vec<i64> {
    let mut c: Vec<i64> = x.iter().map(|v| v.abs()).collect();
    c.sort_unstable();
    c
}

/// Exact `(-Δ + m²)^{-1}` on a torus by dense inversion.
pub fn green_torus_exact(lat: &TorusLattice, m2: f64) -> Result<GreenTable> {
    if !(m2 > 0.0) || !m2.is_finite() {
        return Err(domain("torus Green function needs m2 > 0"));
    }
    let mut a = -lat.laplacian_matrix();
    for i in 0..lat.num_sites() {
        a[(i, i)] += m2;
    }
    let mut inv = a.try_inverse().ok_or(Error::Singular)?;
    // Symmetrise away rounding asymmetry.
    let t = inv.transpose();
    inv = (inv + t) * 0.5;
    Ok(GreenTable::Torus { lattice: lat.clone(), m2, matrix: inv })
}

/// Dense complex inverse of `-Δ + V` with diagonal `V`.
pub fn green_dense_complex(lat: &TorusLattice, v: &[Complex64]) -> Result<DMatrix<Complex64>> {
    let m = lat.num_sites();
    if v.len() != m {
        return Err(invalid("potential length must equal the number of sites"));
    }
    let lap = lat.laplacian_matrix();
    let mut a = DMatrix::<Complex64>::from_fn(m, m, |i, j| Complex64::new(-lap[(i, j)], 0.0));
    for i in 0..m {
        a[(i, i)] += v[i];
    }
    a.try_inverse().ok_or(Error::Singular)
}

/// Lattice heat kernel `p_t(x) = Π_i e^{-2t} I_{|x_i|}(2t)` of the rate-2d
/// walk (`e^{tΔ}` kernel).
pub fn heat_kernel(x: &[i64], t: f64) -> f64 {
    x.iter().map(|&xi| bessel_i_scaled(xi.unsigned_abs(), 2.0 * t)).product()
}

/// Return-probability kernel `p_t(0)` in dimension `d`.
pub fn heat_kernel_origin(d: usize, t: f64) -> f64 {
    libm::pow(bessel_i_scaled(0, 2.0 * t), d as f64)
}

fn validate_zd(d: usize, m2: f64) -> Result<()> {
    if d < 1 {
        return Err(invalid("dimension must be >= 1"));
    }
    if !(m2 >= 0.0) || !m2.is_finite() {
        return Err(invalid("m2 must be finite and >= 0"));
    }
    if m2 == 0.0 && d <= 2 {
        return Err(domain("massless Green function diverges for d <= 2"));
    }
    Ok(())
}

/// Upper end of the time integration; beyond it the continuum tail bound
/// `(4π)^{-d/2} T^{1-d/2}/(d/2-1)·e^{-m²T}` is added.
fn time_horizon(m2: f64, r2: f64) -> f64 {
    let t = 1e14 * r2.max(1.0);
    if m2 > 0.0 {
        t.min(750.0 / m2)
    } else {
        t
    }
}

fn continuum_tail(d: usize, m2: f64, t: f64) -> f64 {
    if d <= 2 || m2 * t > 700.0 {
        return 0.0;
    }
    let h = 0.5 * d as f64;
    libm::pow(4.0 * PI, -h) * libm::pow(t, 1.0 - h) / (h - 1.0) * libm::exp(-m2 * t)
}

/// Integrate `f(t)` over `[lo, hi]` on a log scale (`t = e^s`), with `lo > 0`.
pub(crate) fn integrate_log<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rel: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let (a, b) = (libm::log(lo), libm::log(hi));
    let r = integrate(
        |s| {
            let t = libm::exp(s);
            t * f(t)
        },
        a,
        b,
        0.0,
        rel,
        4000,
    )?;
    Ok(r.value)
}

/// `G_{0x}(m²)` on ℤ^d via the heat-kernel time integral.
pub fn green_zd_heat(d: usize, m2: f64, x: &[i64]) -> Result<GreenValue> {
    validate_zd(d, m2)?;
    if x.len() != d {
        return Err(invalid("point dimension mismatch"));
    }
    let r2: f64 = x.iter().map(|&v| (v as f64) * (v as f64)).sum();
    let f = |t: f64| libm::exp(-m2 * t) * heat_kernel(x, t);
    let horizon = time_horizon(m2, r2);
    let first = integrate(f, 0.0, 1.0, 0.0, 1e-13, 2000)?.value;
    let rest = integrate_log(f, 1.0, horizon, 1e-13)?;
    let tail = continuum_tail(d, m2, horizon);
    let value = first + rest + tail;
    Ok(GreenValue { value, abs_err: 1e-12 * value + 1e-3 * tail })
}

struct AxisRule {
    /// 4 sin²(k/2)
    lam: Vec<f64>,
    /// weight · cos(k x_i) / π
    w: Vec<f64>,
}

fn axis_rule(order: usize, levels: usize, xi: i64) -> AxisRule {
    let gl = GaussLegendre::new(order);
    let mut breaks = alloc::vec![0.0];
    let inner = PI / 4.0;
    for l in (0..levels).rev() {
        breaks.push(inner * libm::pow(0.5, l as f64));
    }
    let outer_panels = 3 + xi.unsigned_abs() as usize;
    for p in 1..=outer_panels {
        breaks.push(inner + (PI - inner) * p as f64 / outer_panels as f64);
    }
    let mut lam = Vec::new();
    let mut w = Vec::new();
    for win in breaks.windows(2) {
        let (a, b) = (win[0], win[1]);
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        for (node, weight) in gl.nodes.iter().zip(&gl.weights) {
            let k = c + h * node;
            let s = libm::sin(0.5 * k);
            lam.push(4.0 * s * s);
            w.push(weight * h * libm::cos(k * xi as f64) / PI);
        }
    }
    AxisRule { lam, w }
}

fn fourier_at(d: usize, m2: f64, x: &[i64], order: usize) -> f64 {
    // Integrate the axis with the largest |x_i| analytically:
    // (1/2π)∫cos(kx)/(A + 4sin²(k/2)) dk = ρ^{|x|}/√(A(A+4)).
    let axis = (0..d).max_by_key(|&i| x[i].unsigned_abs()).unwrap_or(0);
    let xa = x[axis].unsigned_abs() as f64;
    let line = |a: f64| {
        let root = libm::sqrt(a * (a + 4.0));
        let log_rho = -libm::log1p(0.5 * a + libm::sqrt(a + 0.25 * a * a));
        libm::exp(xa * log_rho) / root
    };
    if d == 1 {
        return line(m2);
    }
    let levels = if d == 2 || d == 3 { 40 } else { 18 };
    let rules: Vec<AxisRule> = (0..d)
        .filter(|&i| i != axis)
        .map(|i| axis_rule(order, levels, x[i]))
        .collect();
    let dims = rules.len();
    let mut idx = alloc::vec![0usize; dims];
    let mut total = 0.0;
    loop {
        let mut a = m2;
        let mut w = 1.0;
        for (r, &i) in rules.iter().zip(&idx) {
            a += r.lam[i];
            w *= r.w[i];
        }
        total += w * line(a);
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < rules[k].lam.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == dims {
                return total;
            }
        }
    }
}

/// `G_{0x}(m²)` on ℤ^d by Fourier quadrature of `1/(λ(k) + m²)`.
///
/// One coordinate is integrated in closed form; the remaining `d-1` use a
/// tensor Gauss-Legendre rule over `[0, π]` (reflection symmetry) with
/// panels graded geometrically towards `k = 0`. `resolution` is the
/// per-panel order; the result is refined by doubling it and the
/// difference of the two levels is the reported error.
pub fn green_zd_fourier(d: usize, m2: f64, x: &[i64], resolution: usize) -> Result<GreenValue> {
    validate_zd(d, m2)?;
    if x.len() != d {
        return Err(invalid("point dimension mismatch"));
    }
    if resolution < 2 {
        return Err(invalid("resolution must be >= 2"));
    }
    if d == 1 {
        return Ok(GreenValue { value: fourier_at(1, m2, x, resolution), abs_err: 0.0 });
    }
    let coarse = fourier_at(d, m2, x, resolution);
    let fine = fourier_at(d, m2, x, 2 * resolution);
    Ok(GreenValue { value: fine, abs_err: (fine - coarse).abs() })
}

/// Fourier-quadrature values on all symmetry classes with
/// `0 ≤ x_1 ≤ … ≤ x_d ≤ radius`.
pub fn green_zd_table(d: usize, m2: f64, radius: i64, resolution: usize) -> Result<GreenTable> {
    let mut points = Vec::new();
    for rep in symmetry_classes(d, radius) {
        let v = green_zd_fourier(d, m2, &rep, resolution)?;
        points.push((rep, v));
    }
    Ok(GreenTable::Zd { d, m2, points })
}

/// Sorted non-negative representatives with entries ≤ `radius`.
pub fn symmetry_classes(d: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = alloc::vec![0i64; d];
    fn rec(i: usize, lo: i64, radius: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in lo..=radius {
            cur[i] = v;
            rec(i + 1, v, radius, cur, out);
        }
    }
    rec(0, 0, radius, &mut cur, &mut out);
    out
}

/// Number of lattice points in the symmetry class of a sorted
/// non-negative representative.
pub fn class_size(rep: &[i64]) -> u64 {
    let d = rep.len();
    let mut perms = (1..=d as u64).product::<u64>();
    let mut i = 0;
    while i < d {
        let mut j = i;
        while j < d && rep[j] == rep[i] {
            j += 1;
        }
        perms /= (1..=(j - i) as u64).product::<u64>();
        i = j;
    }
    let nonzero = rep.iter().filter(|&&v| v != 0).count() as u32;
    perms << nonzero
}

/// Neumann-series partial sums with a certified tail.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannResult {
    pub matrix: DMatrix<Complex64>,
    /// Number of series terms summed.
    pub terms: usize,
    /// Bound on the max-row-sum norm of the neglected terms.
    pub tail_bound: f64,
}

/// `Σ_n (U^{-1}J)^n U^{-1}` with `U = 2d·I + V`: the sum over
/// nearest-neighbour paths with weight `Π 1/(2d + v)` per visited site.
///
/// Terms are accumulated by doubling (`S_{2N} = S_N + K^N S_N`) until
/// `‖K^N‖/(1-r)·‖S_N‖`-type tail bound is below `tail_tol`, where
/// `r = max_x 2d/|2d + v_x| < 1`.
pub fn neumann_green(
    lat: &TorusLattice,
    v: &[Complex64],
    n_max: usize,
    tail_tol: f64,
) -> Result<NeumannResult> {
    let m = lat.num_sites();
    if v.len() != m {
        return Err(invalid("potential length must equal the number of sites"));
    }
    if v.iter().any(|z| !(z.re > 0.0)) {
        return Err(invalid("Neumann series needs Re(v_x) > 0"));
    }
    let two_d = 2.0 * lat.dim() as f64;
    let uinv: Vec<Complex64> = v.iter().map(|z| Complex64::new(1.0, 0.0) / (z + two_d)).collect();
    let r = uinv.iter().map(|z| two_d * z.norm()).fold(0.0, f64::max);
    if r >= 1.0 {
        return Err(Error::NoConvergence("spectral radius estimate >= 1".into()));
    }
    let adj = lat.adjacency_matrix();
    let k = DMatrix::<Complex64>::from_fn(m, m, |i, j| uinv[i] * adj[(i, j)]);
    let mut sum = DMatrix::<Complex64>::from_fn(m, m, |i, j| if i == j { uinv[i] } else { Complex64::new(0.0, 0.0) });
    let mut power = k.clone();
    let mut terms = 1usize;
    let row_norm = |a: &DMatrix<Complex64>| {
        (0..a.nrows())
            .map(|i| a.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    loop {
        // Σ_{n ≥ N} K^n U^{-1} = K^N (Σ_n K^n U^{-1}), norm ≤ ‖K^N‖·‖U^{-1}‖/(1-r).
        let umax = uinv.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let tail = row_norm(&power) * umax / (1.0 - r);
        if tail <= tail_tol {
            return Ok(NeumannResult { matrix: sum, terms, tail_bound: tail });
        }
        if 2 * terms > n_max + 1 {
            return Err(Error::NoConvergence(alloc::format!(
                "tail bound {tail:e} above {tail_tol:e} after {terms} terms"
            )));
        }
        sum = &sum + &power * &sum;
        power = &power * &power;
        terms *= 2;
    }
}

/// One chain of the killed-walk estimator: the walk holds at `x` for an
/// Exp(2d + v_x) time, is killed with probability `v_x/(2d + v_x)` and
/// otherwise jumps to a uniform neighbour slot. The sample is the time spent
/// at `b` before killing, an unbiased estimate of
/// `∫ E_a[e^{-Σ v_x L_T(x)} 1{X(T)=b}] dT`.
pub fn walk_green_chain(
    lat: &TorusLattice,
    v: &[f64],
    a: usize,
    b: usize,
    samples: u64,
    seed: u64,
    chain: u64,
) -> Tally {
    let mut rng = chain_rng(seed, chain);
    let two_d = 2.0 * lat.dim() as f64;
    let mut tally = Tally::default();
    for _ in 0..samples {
        let mut x = a;
        let mut at_b = 0.0;
        loop {
            let rate = two_d + v[x];
            let h = exponential(&mut rng, rate);
            if x == b {
                at_b += h;
            }
            if rng.gen::<f64>() * rate < v[x] {
                break;
            }
            let nb = lat.neighbours(x);
            x = nb[rng.gen_range(0..nb.len())];
        }
        tally.push(at_b);
    }
    tally
}

/// Number of chains used by the walk estimator.
pub const WALK_CHAINS: usize = 32;

/// Killed-walk Monte Carlo for `(-Δ + V)^{-1}_{ab}` with real `V > 0`.
pub fn walk_green_mc(
    lat: &TorusLattice,
    v: &[f64],
    a: usize,
    b: usize,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if v.len() != lat.num_sites() || v.iter().any(|&x| !(x > 0.0)) {
        return Err(invalid("potential must be positive on every site"));
    }
    if a >= lat.num_sites() || b >= lat.num_sites() {
        return Err(invalid("site index outside the torus"));
    }
    if samples < WALK_CHAINS as u64 {
        return Err(invalid(alloc::format!("samples must be >= {WALK_CHAINS}")));
    }
    let tallies: Vec<Tally> = split_samples(samples, WALK_CHAINS)
        .into_iter()
        .enumerate()
        .map(|(c, n)| walk_green_chain(lat, v, a, b, n, seed, c as u64))
        .collect();
    McEstimate::from_tallies(&tallies, seed)
}

/// How a bubble value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BubbleMethod {
    /// `(n+8)∫_0^∞ u p_u(0) e^{-m²u} du`; `cutoff` is the time horizon.
    TimeIntegral,
    /// `(n+8)Σ_{|x|_∞ ≤ R} G_{0x}²` plus a fitted exponential tail;
    /// `cutoff` is `R`.
    SpatialSum,
}

/// Bubble diagram `B_{m²} = (n+8) Σ_x G_{0x}(m²)²` on ℤ⁴.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleResult {
    pub value: f64,
    pub method: BubbleMethod,
    pub cutoff: f64,
    /// Estimated (time route: bounded) contribution beyond the cutoff,
    /// already included in `value`.
    pub tail_estimate: f64,
    /// Fitted decay `(C, c)` of shell sums `≈ C e^{-c r}` (spatial route).
    pub tail_fit: Option<(f64, f64)>,
    /// Set when the tail is not small against the value.
    pub flagged: bool,
}

/// Bubble via the Parseval/semigroup identity
/// `Σ_x G_{0x}² = ∫_0^∞ u p_u(0) e^{-m²u} du` (d = 4).
pub fn bubble(n: usize, m2: f64) -> Result<BubbleResult> {
    if !(m2 > 0.0) || !m2.is_finite() {
        return Err(domain("bubble needs m2 > 0"));
    }
    let f = |u: f64| u * heat_kernel_origin(4, u) * libm::exp(-m2 * u);
    let horizon = 750.0 / m2;
    let first = integrate(f, 0.0, 1.0, 0.0, 1e-13, 2000)?.value;
    let rest = if horizon > 1.0 { integrate_log(f, 1.0, horizon, 1e-13)? } else { 0.0 };
    // ∫_T^∞ (4π)^{-2} u^{-1} e^{-m²u} du ≤ (4π)^{-2} e^{-m²T}/(m²T).
    let tail = libm::exp(-m2 * horizon) / (16.0 * PI * PI * m2 * horizon);
    let scale = (n + 8) as f64;
    Ok(BubbleResult {
        value: scale * (first + rest),
        method: BubbleMethod::TimeIntegral,
        cutoff: horizon,
        tail_estimate: scale * tail,
        tail_fit: None,
        flagged: false,
    })
}

/// Bubble by direct spatial summation of heat-route Green values over
/// `|x|_∞ ≤ radius`, with an exponential tail fitted to the last shells.
/// Practical only for `m²` of order one; used as a cross-check.
pub fn bubble_spatial(n: usize, m2: f64, radius: i64) -> Result<BubbleResult> {
    if !(m2 > 0.0) {
        return Err(domain("bubble needs m2 > 0"));
    }
    if radius < 3 {
        return Err(invalid("radius must be >= 3"));
    }
    let mut shells = alloc::vec![0.0; radius as usize + 1];
    for rep in symmetry_classes(4, radius) {
        let g = green_zd_heat(4, m2, &rep)?.value;
        let r = *rep.iter().max().unwrap_or(&0) as usize;
        shells[r] += class_size(&rep) as f64 * g * g;
    }
    let sum: f64 = shells.iter().sum();
    let (s1, s2) = (shells[radius as usize - 1], shells[radius as usize]);
    let rate = libm::log(s1 / s2);
    let q = libm::exp(-rate);
    let tail = if rate > 0.0 { s2 * q / (1.0 - q) } else { f64::INFINITY };
    let amp = s2 * libm::exp(rate * radius as f64);
    let scale = (n + 8) as f64;
    Ok(BubbleResult {
        value: scale * (sum + tail),
        method: BubbleMethod::SpatialSum,
        cutoff: radius as f64,
        tail_estimate: scale * tail,
        tail_fit: Some((amp, rate)),
        flagged: !(tail <= 1e-6 * sum),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_site_torus() {
        let lat = TorusLattice::with_side(4, 1).unwrap();
        let g = green_torus_exact(&lat, 4.0).unwrap();
        assert!((g.torus_entry(0, 0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn two_site_torus_values() {
        let lat = TorusLattice::with_side(1, 2).unwrap();
        let g = green_torus_exact(&lat, 1.0).unwrap();
        assert!((g.torus_entry(0, 0).unwrap() - 0.6).abs() < 1e-14);
        assert!((g.torus_entry(0, 1).unwrap() - 0.4).abs() < 1e-14);
        assert!(green_torus_exact(&lat, 0.0).is_err());
    }

    #[test]
    fn massless_low_dimension_is_domain_error() {
        assert!(matches!(green_zd_fourier(1, 0.0, &[0], 4), Err(Error::Domain(_))));
        assert!(matches!(green_zd_heat(2, 0.0, &[0, 0]), Err(Error::Domain(_))));
    }

    #[test]
    fn one_dimensional_closed_form() {
        // 1-d: G_{0x} = ρ^{|x|}/√(m²(m²+4)).
        let m2: f64 = 0.5;
        let rho = (m2 + 2.0 - libm::sqrt(m2 * (m2 + 4.0))) / 2.0;
        for x in 0..6 {
            let want = libm::pow(rho, x as f64) / libm::sqrt(m2 * (m2 + 4.0));
            let f = green_zd_fourier(1, m2, &[x], 4).unwrap().value;
            let h = green_zd_heat(1, m2, &[x]).unwrap().value;
            assert!((f - want).abs() < 1e-14);
            assert!((h - want).abs() < 1e-11 * want, "x={x}: {h} vs {want}");
        }
    }

    #[test]
    fn class_sizes_cover_the_cube() {
        let total: u64 = symmetry_classes(4, 3).iter().map(|r| class_size(r)).sum();
        assert_eq!(total, 7u64.pow(4));
    }

    #[test]
    fn neumann_zero_step_term() {
        let lat = TorusLattice::with_side(1, 3).unwrap();
        let v: Vec<Complex64> = [1.0, 2.0, 3.0].iter().map(|&x| Complex64::new(x, 0.0)).collect();
        // Tail tolerance too loose to add any term beyond n = 0.
        let r = neumann_green(&lat, &v, 0, 10.0).unwrap();
        assert_eq!(r.terms, 1);
        for i in 0..3 {
            assert!((r.matrix[(i, i)].re - 1.0 / (2.0 + v[i].re)).abs() < 1e-15);
        }
    }
}
