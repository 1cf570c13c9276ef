//! Heat-kernel slab decomposition `G = Σ_j C_j` with
//! `C_j = ∫_{t_{j-1}}^{t_j} e^{tΔ} e^{-m²t} dt`, `t_0 = 0`, `t_j = τ^j`.
//!
//! Per-scale moments are exact time integrals:
//! `w_j^{(1)} = ∫_0^{t_j} e^{-m²t} dt` and
//! `w_j^{(2)} = Σ_x w_{j;0x}² = ∫_0^{2t_j} p_u(0) e^{-m²u} min(u, 2t_j - u) du`,
//! so no spatial cutoff enters the flow coefficients.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::greens::{green_zd_heat, heat_kernel, heat_kernel_origin, integrate_log, symmetry_classes};
use crate::quad::integrate;

/// Relative tolerance of all slab quadratures.
const SLAB_TOL: f64 = 1e-12;

/// Largest admissible slab time.
const MAX_TIME: f64 = 1e300;

/// Heat-slab decomposition of `(-Δ + m²)^{-1}` on ℤ^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub d: usize,
    pub l: u64,
    pub m2: f64,
    pub max_scale: u32,
    /// Table radius: entries are stored for displacements with
    /// `|x|_∞ ≤ cutoff`.
    pub cutoff: i64,
    /// Ratio `τ` of consecutive slab times.
    pub time_base: f64,
    /// `t_0, …, t_J`.
    pub times: Vec<f64>,
    /// `C_{j;00}` at index `j` (index 0 unused, 0).
    pub c00: Vec<f64>,
    /// `C_j^{(1)} = Σ_x C_{j;0x}` at index `j` (index 0 unused, 0).
    pub c1: Vec<f64>,
    /// `w_j^{(1)}`, `j = 0..=J`.
    pub w1: Vec<f64>,
    /// `w_j^{(2)}`, `j = 0..=J`, accumulated from `dw2`.
    pub w2: Vec<f64>,
    /// `δ_j[w^{(2)}] = w_{j+1}^{(2)} - w_j^{(2)}`, `j = 0..J`.
    pub dw2: Vec<f64>,
    /// `G_{00}(m²)` and the part of it beyond scale `J`.
    pub g00: f64,
    pub tail00: f64,
    /// Symmetry-class representatives with their `C_j` values (`j = 1..=J`).
    pub table: Vec<(Vec<i64>, Vec<f64>)>,
    /// Set when the table radius is below `L^J/2`.
    pub range_warning: bool,
}

fn slab_times(time_base: f64, max_scale: u32) -> Result<Vec<f64>> {
    let mut t = alloc::vec![0.0];
    for j in 1..=max_scale {
        let v = libm::pow(time_base, j as f64);
        if !(v <= MAX_TIME) {
            return Err(invalid(alloc::format!("slab time t_{j} overflows")));
        }
        t.push(v);
    }
    Ok(t)
}

/// `∫_a^b f(t) dt` for a slab: linear variable on the first slab, log
/// variable afterwards.
fn slab_integral<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    if a == 0.0 {
        Ok(integrate(f, 0.0, b, 0.0, SLAB_TOL, 4000)?.value)
    } else {
        integrate_log(f, a, b, SLAB_TOL)
    }
}

/// `∫_a^b e^{-m²t} dt`.
fn exp_integral(m2: f64, a: f64, b: f64) -> f64 {
    if m2 == 0.0 {
        b - a
    } else {
        libm::exp(-m2 * a) * -libm::expm1(-m2 * (b - a)) / m2
    }
}

/// Change of `min(u, 2T-u)` (the convolution length on `[0,T]²`) between
/// horizons `T = s` and `T = t > 2s`.
fn length_increment(u: f64, s: f64, t: f64) -> f64 {
    if u <= s {
        0.0
    } else if u <= 2.0 * s {
        2.0 * (u - s)
    } else if u <= t {
        u
    } else if u <= 2.0 * t {
        2.0 * t - u
    } else {
        0.0
    }
}

impl Decomposition {
    /// Slab `j ≥ 1` at displacement `x`.
    pub fn slab_entry(&self, j: u32, x: &[i64]) -> Result<f64> {
        if j < 1 || j > self.max_scale {
            return Err(invalid("scale outside 1..=J"));
        }
        if x.len() != self.d {
            return Err(invalid("displacement dimension mismatch"));
        }
        let m2 = self.m2;
        let (a, b) = (self.times[j as usize - 1], self.times[j as usize]);
        slab_integral(|t| libm::exp(-m2 * t) * heat_kernel(x, t), a, b)
    }

    /// `C_{j;0x}` for `j = 1..=J` (index 0 holds 0) and the remainder
    /// `G_{0x} - w_{J;0x}`.
    pub fn pair_profile(&self, x: &[i64]) -> Result<PairProfile> {
        let mut c = alloc::vec![0.0];
        for j in 1..=self.max_scale {
            c.push(self.slab_entry(j, x)?);
        }
        let w: f64 = c.iter().sum();
        let g = green_zd_heat(self.d, self.m2, x)?.value;
        Ok(PairProfile { x: x.to_vec(), c, tail: g - w, green: g })
    }

    /// Symbol `Ĉ_j(k) = ∫_{t_{j-1}}^{t_j} e^{-t(λ(k) + m²)} dt`,
    /// `λ(k) = Σ 2(1 - cos k_i)`.
    pub fn slab_symbol(&self, j: u32, k: &[f64]) -> f64 {
        let lam: f64 = k.iter().map(|&ki| 2.0 * (1.0 - libm::cos(ki))).sum();
        let (a, b) = (self.times[j as usize - 1], self.times[j as usize]);
        exp_integral(lam + self.m2, a, b)
    }

    /// Stored table value `C_{j;0x}`, if `x` lies within the cutoff.
    pub fn table_entry(&self, j: u32, x: &[i64]) -> Option<f64> {
        let key = crate::greens::canonical(x);
        self.table
            .iter()
            .find(|(p, _)| *p == key)
            .map(|(_, v)| v[j as usize - 1])
    }

    /// `w_{j;0x} = Σ_{i ≤ j} C_{i;0x}` from the table.
    pub fn table_partial_sum(&self, j: u32, x: &[i64]) -> Option<f64> {
        if j == 0 {
            return Some(0.0);
        }
        let key = crate::greens::canonical(x);
        self.table
            .iter()
            .find(|(p, _)| *p == key)
            .map(|(_, v)| v[..j as usize].iter().sum())
    }
}

/// Slabs at one displacement together with the exact Green value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairProfile {
    pub x: Vec<i64>,
    /// `C_{j;0x}`, index `j` (index 0 holds 0).
    pub c: Vec<f64>,
    /// `G_{0x} - Σ_{j ≤ J} C_{j;0x}`.
    pub tail: f64,
    pub green: f64,
}

impl PairProfile {
    /// `w_{j;0x}`.
    pub fn w(&self, j: u32) -> f64 {
        self.c[..=j as usize].iter().sum()
    }
}

/// Build the decomposition with slab times `t_j = time_base^j`.
pub fn decompose_with_base(
    d: usize,
    l: u64,
    m2: f64,
    max_scale: u32,
    cutoff: i64,
    time_base: f64,
) -> Result<Decomposition> {
    if d < 1 {
        return Err(invalid("dimension must be >= 1"));
    }
    if l < 2 {
        return Err(invalid("block factor L must be >= 2"));
    }
    if max_scale < 1 {
        return Err(invalid("J must be >= 1"));
    }
    if !(m2 >= 0.0) || !m2.is_finite() {
        return Err(invalid("m2 must be finite and >= 0"));
    }
    if cutoff < 0 {
        return Err(invalid("cutoff must be >= 0"));
    }
    if !(time_base >= 2.0) {
        return Err(invalid("slab time base must be >= 2"));
    }
    let times = slab_times(time_base, max_scale)?;
    let origin = alloc::vec![0i64; d];
    let mut dec = Decomposition {
        d,
        l,
        m2,
        max_scale,
        cutoff,
        time_base,
        times: times.clone(),
        c00: alloc::vec![0.0],
        c1: alloc::vec![0.0],
        w1: alloc::vec![0.0],
        w2: alloc::vec![0.0],
        dw2: Vec::new(),
        g00: 0.0,
        tail00: 0.0,
        table: Vec::new(),
        range_warning: false,
    };
    for j in 1..=max_scale {
        let c = dec.slab_entry(j, &origin)?;
        dec.c00.push(c);
        let c1 = exp_integral(m2, times[j as usize - 1], times[j as usize]);
        dec.c1.push(c1);
        let prev = dec.w1[j as usize - 1];
        dec.w1.push(prev + c1);
    }
    let p0 = |u: f64| heat_kernel_origin(d, u) * libm::exp(-m2 * u);
    for j in 0..max_scale as usize {
        let (s, t) = (times[j], times[j + 1]);
        let f = |u: f64| p0(u) * length_increment(u, s, t);
        // Integrate piecewise over the kinks of the length increment.
        let mut knots = alloc::vec![s, 2.0 * s, t, 2.0 * t];
        knots.dedup();
        let mut v = 0.0;
        for k in knots.windows(2) {
            if k[1] > k[0] {
                v += slab_integral(f, k[0], k[1])?;
            }
        }
        dec.dw2.push(v);
        let prev = dec.w2[j];
        dec.w2.push(prev + v);
    }
    dec.g00 = green_zd_heat(d, m2, &origin)?.value;
    dec.tail00 = dec.g00 - dec.c00.iter().sum::<f64>();
    for rep in symmetry_classes(d, cutoff) {
        let mut vals = Vec::with_capacity(max_scale as usize);
        for j in 1..=max_scale {
            vals.push(dec.slab_entry(j, &rep)?);
        }
        dec.table.push((rep, vals));
    }
    dec.range_warning = (cutoff as f64) < 0.5 * libm::pow(l as f64, max_scale as f64);
    Ok(dec)
}

/// Decomposition with the default slab times `t_j = L^j`.
pub fn decompose(d: usize, l: u64, m2: f64, max_scale: u32, cutoff: i64) -> Result<Decomposition> {
    decompose_with_base(d, l, m2, max_scale, cutoff, l as f64)
}

/// Functionals of `(ν, w)` accepted by [`delta_op`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeltaFunctional {
    /// `ν·w^{(1)}`
    NuW1,
    /// `w^{(2)}`
    W2,
    /// `ν·w^{(2)}`
    NuW2,
    /// `w_{ab}^p`
    WabPow(u32),
}

/// `ν⁺ = ν + g(n+2) C_{00}`.
pub fn nu_plus(n: usize, g: f64, nu: f64, c00: f64) -> f64 {
    nu + g * (n as f64 + 2.0) * c00
}

/// `δ[ν w^{(1)}] = ν⁺(w^{(1)} + C^{(1)}) - ν w^{(1)}` from raw numbers.
pub fn delta_nu_w1(n: usize, g: f64, nu: f64, c00: f64, w1: f64, c1: f64) -> f64 {
    nu_plus(n, g, nu, c00) * (w1 + c1) - nu * w1
}

/// `(n+8)·δ_j[w^{(2)}]`.
pub fn beta_j(dec: &Decomposition, n: usize, j: u32) -> Result<f64> {
    if j + 1 > dec.max_scale {
        return Err(invalid("beta_j needs j + 1 <= J"));
    }
    Ok((n as f64 + 8.0) * dec.dw2[j as usize])
}

/// `δ_j[f] = f(ν⁺, w_j + C_{j+1}) - f(ν, w_j)` with `ν⁺` from `C_{j+1;00}`.
///
/// For `WabPow(p)` the pair slabs are taken from `pair`; the value is
/// exactly 0 below the coalescence scale (`j < j_ab`).
pub fn delta_op(
    dec: &Decomposition,
    n: usize,
    g: f64,
    nu: f64,
    j: u32,
    f: DeltaFunctional,
    pair: Option<(&PairProfile, Option<u32>)>,
) -> Result<f64> {
    if j + 1 > dec.max_scale {
        return Err(invalid("delta_op needs j + 1 <= J"));
    }
    let ju = j as usize;
    let nup = nu_plus(n, g, nu, dec.c00[ju + 1]);
    Ok(match f {
        DeltaFunctional::NuW1 => nup * dec.w1[ju + 1] - nu * dec.w1[ju],
        DeltaFunctional::W2 => dec.dw2[ju],
        DeltaFunctional::NuW2 => nup * dec.w2[ju + 1] - nu * dec.w2[ju],
        DeltaFunctional::WabPow(p) => {
            let (profile, j_ab) = pair.ok_or_else(|| invalid("w_ab^p needs a pair profile"))?;
            if j_ab.is_none_or(|jab| j < jab) {
                return Ok(0.0);
            }
            let w = profile.w(j);
            let w1 = w + profile.c[ju + 1];
            libm::pow(w1, p as f64) - libm::pow(w, p as f64)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_arithmetic_example() {
        let v = delta_nu_w1(1, 0.1, 0.0, 0.5, 2.0, 1.0);
        assert!((v - 0.45).abs() < 1e-15);
        assert!((nu_plus(1, 0.1, 0.0, 0.5) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn length_increment_is_difference_of_lengths() {
        let len = |u: f64, t: f64| if u <= 2.0 * t { u.min(2.0 * t - u) } else { 0.0 };
        for i in 0..200 {
            let u = i as f64 * 0.05;
            let got = length_increment(u, 1.5, 4.0);
            assert!((got - (len(u, 4.0) - len(u, 1.5))).abs() < 1e-14, "u={u}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(decompose(4, 2, 0.0, 0, 1).is_err());
        assert!(decompose(4, 1, 0.0, 3, 1).is_err());
        assert!(decompose(4, 2, -1.0, 3, 1).is_err());
        assert!(decompose(4, 2, 0.0, 2000, 1).is_err());
    }
}
