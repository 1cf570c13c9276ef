//! Exact watermelon/star values on tori with at most three sites.
//!
//! Integrating out holding times, a jump skeleton of the `p` walks
//! contributes `Π_x h_{K_x}` where `K_x` counts holding intervals at `x` and
//! `h_K = ∫_0^∞ ℓ^{K-1}/(K-1)! e^{-(2d+ν)ℓ - gℓ²} dℓ`. Skeletons are
//! enumerated by dynamic programming over the interval-count vector.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::lattice::TorusLattice;
use crate::quad::integrate;
use crate::special::{binomial, factorial};

/// Oracle value with its certified truncation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TinyOracle {
    pub value: f64,
    pub tail_bound: f64,
    pub n_max: usize,
}

/// `h_K(c, g) = ∫_0^∞ ℓ^{K-1}/(K-1)! e^{-cℓ - gℓ²} dℓ` for `K ≥ 1`.
pub fn holding_integral(k: usize, c: f64, g: f64) -> Result<f64> {
    if k == 0 {
        return Err(invalid("holding integral needs K >= 1"));
    }
    if g == 0.0 {
        return Ok(libm::pow(c, -(k as f64)));
    }
    let km1 = (k - 1) as f64;
    let lg = libm::lgamma(k as f64);
    let log_f = |l: f64| {
        if l <= 0.0 {
            if k == 1 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            km1 * libm::log(l) - lg - c * l - g * l * l
        }
    };
    // Mode of the integrand.
    let peak = if k == 1 { 0.0 } else { (-c + libm::sqrt(c * c + 8.0 * g * km1)) / (4.0 * g) };
    let scale = 1.0 / libm::sqrt(c * c / (km1 + 1.0) + 2.0 * g) + 1e-300;
    let f = |l: f64| libm::exp(log_f(l));
    let mut total = 0.0;
    if peak > 0.0 {
        total += integrate(f, 0.0, peak, 0.0, 1e-14, 2000)?.value;
    }
    let mut lo = peak;
    let mut width = 4.0 * scale;
    for _ in 0..200 {
        let part = integrate(f, lo, lo + width, 0.0, 1e-14, 2000)?.value;
        total += part;
        lo += width;
        width *= 2.0;
        if part <= 1e-18 * total {
            return Ok(total);
        }
    }
    Err(Error::NoConvergence("holding integral tail".into()))
}

/// Truncation bound: skeletons with `n` jumps number at most
/// `C(n+p-1, p-1)(2d)^n` and weigh at most `(2d+ν)^{-(n+p)}`, so the
/// neglected part is `p!(2d+ν)^{-p} Σ_{n>n_max} C(n+p-1,p-1) r^n` with
/// `r = 2d/(2d+ν)`.
pub fn tail_bound(d: usize, nu: f64, p: u32, n_max: usize) -> f64 {
    let c = 2.0 * d as f64 + nu;
    let r = 2.0 * d as f64 / c;
    let pre = factorial(p) * libm::pow(c, -(p as f64));
    let mut s = 0.0;
    let mut n = n_max + 1;
    loop {
        let t = binomial((n + p as usize - 1) as u64, (p - 1) as u64) * libm::pow(r, n as f64);
        s += t;
        if t < 1e-18 * s || t == 0.0 {
            break;
        }
        n += 1;
    }
    pre * s
}

/// Smallest `n_max` with `tail_bound ≤ tol`.
pub fn required_n_max(d: usize, nu: f64, p: u32, tol: f64) -> usize {
    let mut n = 0;
    while tail_bound(d, nu, p, n) > tol {
        n = if n < 64 { n + 1 } else { n + n / 8 };
    }
    n
}

/// Exact watermelon (`b = Some`) or star (`b = None`) value on a torus with
/// `M ≤ 3` sites, truncated at `n_max` total jumps.
pub fn wsaw_tiny_oracle(
    lat: &TorusLattice,
    g: f64,
    nu: f64,
    a: usize,
    b: Option<usize>,
    p: u32,
    n_max: usize,
    tol: f64,
) -> Result<TinyOracle> {
    let m = lat.num_sites();
    if m > 3 {
        return Err(invalid("tiny oracle needs a torus with at most 3 sites"));
    }
    if p < 1 {
        return Err(invalid("p must be >= 1"));
    }
    if !(nu > 0.0) {
        return Err(invalid("tiny oracle needs nu > 0 for its geometric tail bound"));
    }
    if !(g >= 0.0) {
        return Err(invalid("g must be >= 0"));
    }
    if a >= m || b.is_some_and(|b| b >= m) {
        return Err(invalid("site index outside the torus"));
    }
    let d = lat.dim();
    let bound = tail_bound(d, nu, p, n_max);
    if bound > tol {
        return Err(invalid(alloc::format!(
            "tail bound {bound:e} exceeds tol {tol:e}; need n_max >= {}",
            required_n_max(d, nu, p, tol)
        )));
    }
    let c = 2.0 * d as f64 + nu;
    let max_k = n_max + p as usize;
    let h: Vec<f64> = (1..=max_k)
        .map(|k| holding_integral(k, c, g))
        .collect::<Result<_>>()?;
    let hk = |k: usize| if k == 0 { 1.0 } else { h[k - 1] };
    let adj = lat.adjacency_matrix();
    let walks = p as usize;

    // Layer `s` holds states with total interval count s; the count vector
    // is encoded by its first M-1 entries (the last is s minus their sum).
    let free = m - 1;
    let layer_len = |s: usize| (s + 1).pow(free as u32);
    let encode = |k: &[usize], s: usize| k[..free].iter().fold(0, |acc, &v| acc * (s + 1) + v);
    let decode = |mut idx: usize, s: usize, out: &mut [usize]| {
        let mut sum = 0;
        for i in (0..free).rev() {
            out[i] = idx % (s + 1);
            idx /= s + 1;
            sum += out[i];
        }
        if sum > s {
            return false;
        }
        out[m - 1] = s - sum;
        true
    };

    let mut counts = alloc::vec![0usize; m];
    // state index: ((walk * m) + site) * layer_len + count code
    let mut layer = alloc::vec![0.0f64; walks * m * layer_len(1)];
    counts[a] = 1;
    layer[a * layer_len(1) + encode(&counts, 1)] = 1.0;
    let mut total = 0.0;
    for s in 1..=max_k {
        let len = layer_len(s);
        let next_len = layer_len(s + 1);
        let mut next = alloc::vec![0.0f64; walks * m * next_len];
        for w in 0..walks {
            for y in 0..m {
                for code in 0..len {
                    let n_paths = layer[(w * m + y) * len + code];
                    if n_paths == 0.0 || !decode(code, s, &mut counts) {
                        continue;
                    }
                    let at_end = b.is_none_or(|b| b == y);
                    if at_end && w + 1 == walks {
                        let weight: f64 = counts.iter().map(|&k| hk(k)).product();
                        total += n_paths * weight;
                    }
                    if s == max_k {
                        continue;
                    }
                    if at_end && w + 1 < walks {
                        counts[a] += 1;
                        next[((w + 1) * m + a) * next_len + encode(&counts, s + 1)] += n_paths;
                        counts[a] -= 1;
                    }
                    for z in 0..m {
                        let mult = adj[(y, z)];
                        if mult == 0.0 {
                            continue;
                        }
                        counts[z] += 1;
                        next[(w * m + z) * next_len + encode(&counts, s + 1)] += n_paths * mult;
                        counts[z] -= 1;
                    }
                }
            }
        }
        layer = next;
    }
    Ok(TinyOracle { value: factorial(p) * total, tail_bound: bound, n_max })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holding_integral_free_case() {
        assert_eq!(holding_integral(3, 2.0, 0.0).unwrap(), 0.125);
    }

    #[test]
    fn holding_integral_recurrence() {
        // 2g I_{k+1} = k I_{k-1} - c I_k with I_k = k! h_{k+1}.
        let (c, g) = (3.0, 0.07);
        let i = |k: usize| factorial(k as u32) * holding_integral(k + 1, c, g).unwrap();
        for k in 1..30 {
            let lhs = 2.0 * g * i(k + 1);
            let rhs = k as f64 * i(k - 1) - c * i(k);
            assert!((lhs - rhs).abs() <= 1e-10 * (k as f64 * i(k - 1)), "k={k}");
        }
    }

    #[test]
    fn one_site_star_matches_direct_integral() {
        // One site: the walk never leaves, the star value is ∫e^{-νT-gT²}dT.
        let lat = TorusLattice::with_side(1, 1).unwrap();
        let o = wsaw_tiny_oracle(&lat, 0.3, 1.0, 0, None, 1, 400, 1e-12).unwrap();
        let direct = crate::quad::integrate(|t| libm::exp(-t - 0.3 * t * t), 0.0, 80.0, 0.0, 1e-14, 500)
            .unwrap()
            .value;
        assert!((o.value - direct).abs() < 1e-10, "{} vs {direct}", o.value);
    }

    #[test]
    fn insufficient_truncation_is_an_error() {
        let lat = TorusLattice::with_side(1, 2).unwrap();
        let e = wsaw_tiny_oracle(&lat, 0.0, 0.5, 0, Some(1), 1, 5, 1e-10).unwrap_err();
        assert!(alloc::format!("{e}").contains("need n_max"));
    }
}
