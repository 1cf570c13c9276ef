//! Metropolis sampling of the lattice |φ|⁴ model
//! `U = Σ_x [g/4 |φ_x|⁴ + ν/2 |φ_x|² + ½ φ_x·(-Δφ)_x]` and the one-site
//! radial-quadrature oracle.

use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::lattice::TorusLattice;
use crate::models::mc::{chain_rng, McEstimate, Tally, MIN_BATCHES};
use crate::quad::integrate;

/// Model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phi4Params {
    pub n: usize,
    pub g: f64,
    pub nu: f64,
}

impl Phi4Params {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(invalid("spin dimension n must be >= 1"));
        }
        if !(self.g >= 0.0) || !self.nu.is_finite() {
            return Err(invalid("g must be >= 0 and nu finite"));
        }
        if self.g == 0.0 && self.nu <= 0.0 {
            return Err(domain("Gaussian model with nu <= 0 is not normalisable"));
        }
        Ok(())
    }
}

/// Per-site n-vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinConfig {
    pub n: usize,
    pub values: Vec<f64>,
}

impl SpinConfig {
    pub fn zeros(sites: usize, n: usize) -> Self {
        SpinConfig { n, values: alloc::vec![0.0; sites * n] }
    }

    pub fn site(&self, x: usize) -> &[f64] {
        &self.values[x * self.n..(x + 1) * self.n]
    }

    /// Total energy `U`.
    pub fn energy(&self, lat: &TorusLattice, p: &Phi4Params) -> f64 {
        let m = lat.num_sites();
        let mut lap = alloc::vec![0.0; m];
        let mut comp = alloc::vec![0.0; m];
        let mut u = 0.0;
        for i in 0..self.n {
            for x in 0..m {
                comp[x] = self.values[x * self.n + i];
            }
            lat.laplacian_apply(&comp, &mut lap);
            u -= 0.5 * comp.iter().zip(&lap).map(|(a, b)| a * b).sum::<f64>();
        }
        for x in 0..m {
            let r2: f64 = self.site(x).iter().map(|v| v * v).sum();
            u += 0.25 * p.g * r2 * r2 + 0.5 * p.nu * r2;
        }
        u
    }
}

/// Observables reported by [`phi4_mc`].
pub const PHI4_OBSERVABLES: [&str; 7] = [
    "phi_a.phi_b",
    "phi1_a*phi1_b",
    "phi1_a*phi2_b",
    "same_sq_cov",
    "cross_sq_cov",
    "phi_a.phi_a",
    "susceptibility",
];

/// Named estimates plus sampler diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phi4Bundle {
    pub estimates: Vec<(String, McEstimate)>,
    pub acceptance: f64,
    pub width: f64,
}

impl Phi4Bundle {
    pub fn get(&self, name: &str) -> Option<&McEstimate> {
        self.estimates.iter().find(|(k, _)| k == name).map(|(_, e)| e)
    }
}

/// Per-chain result: one value per observable and sampler statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Phi4Chain {
    pub values: [f64; 7],
    pub sweeps: u64,
    pub acceptance: f64,
    pub width: f64,
}

struct Neighbourhood {
    /// Coefficient of ½|φ_x|² in the local energy: `ν + 2d - J_xx`.
    quad: Vec<f64>,
    /// Off-diagonal neighbours with multiplicity.
    others: Vec<Vec<(usize, f64)>>,
}

fn neighbourhood(lat: &TorusLattice, nu: f64) -> Neighbourhood {
    let m = lat.num_sites();
    let two_d = 2.0 * lat.dim() as f64;
    let mut quad = alloc::vec![0.0; m];
    let mut others = alloc::vec![Vec::new(); m];
    for x in 0..m {
        let mut self_loops = 0.0;
        let mut list: Vec<(usize, f64)> = Vec::new();
        for y in lat.neighbours(x) {
            if y == x {
                self_loops += 1.0;
            } else if let Some(e) = list.iter_mut().find(|e| e.0 == y) {
                e.1 += 1.0;
            } else {
                list.push((y, 1.0));
            }
        }
        quad[x] = nu + two_d - self_loops;
        others[x] = list;
    }
    Neighbourhood { quad, others }
}

/// Run one Metropolis chain: `therm` adaptive sweeps then `sweeps`
/// measured sweeps at fixed proposal width.
pub fn phi4_chain(
    lat: &TorusLattice,
    params: &Phi4Params,
    a: usize,
    b: usize,
    sweeps: u64,
    therm: u64,
    seed: u64,
    chain: u64,
) -> Phi4Chain {
    let n = params.n;
    let m = lat.num_sites();
    let nb = neighbourhood(lat, params.nu);
    let mut rng = chain_rng(seed, chain);
    let mut phi = SpinConfig::zeros(m, n);
    let mut width = 1.0;
    let mut proposal = alloc::vec![0.0; n];
    let mut field = alloc::vec![0.0; n];

    let mut sweep = |phi: &mut SpinConfig, width: f64, rng: &mut rand_chacha::ChaCha8Rng| -> u64 {
        let mut accepted = 0;
        for x in 0..m {
            for f in field.iter_mut() {
                *f = 0.0;
            }
            for &(y, mult) in &nb.others[x] {
                for i in 0..n {
                    field[i] += mult * phi.values[y * n + i];
                }
            }
            let cur = &phi.values[x * n..(x + 1) * n];
            let mut r2_old = 0.0;
            let mut r2_new = 0.0;
            let mut dot_old = 0.0;
            let mut dot_new = 0.0;
            for i in 0..n {
                let v = cur[i] + width * (2.0 * rng.gen::<f64>() - 1.0);
                proposal[i] = v;
                r2_old += cur[i] * cur[i];
                r2_new += v * v;
                dot_old += cur[i] * field[i];
                dot_new += v * field[i];
            }
            let local = |r2: f64, dot: f64| 0.25 * params.g * r2 * r2 + 0.5 * nb.quad[x] * r2 - dot;
            let du = local(r2_new, dot_new) - local(r2_old, dot_old);
            if du <= 0.0 || rng.gen::<f64>() < libm::exp(-du) {
                phi.values[x * n..(x + 1) * n].copy_from_slice(&proposal);
                accepted += 1;
            }
        }
        accepted
    };

    // Adapt the width in blocks of 10 sweeps towards 40% acceptance.
    let mut done = 0;
    while done < therm {
        let block = 10.min(therm - done);
        let mut acc = 0;
        for _ in 0..block {
            acc += sweep(&mut phi, width, &mut rng);
        }
        done += block;
        let rate = acc as f64 / (block * m as u64) as f64;
        width *= (rate / 0.4).clamp(0.5, 2.0);
        width = width.clamp(1e-3, 1e3);
    }

    let mut acc = 0u64;
    let mut sums = [0.0f64; 10];
    for _ in 0..sweeps {
        acc += sweep(&mut phi, width, &mut rng);
        let pa = phi.site(a);
        let pb = phi.site(b);
        let dot: f64 = pa.iter().zip(pb).map(|(u, v)| u * v).sum();
        let aa: f64 = pa.iter().map(|u| u * u).sum();
        // Component-averaged squares correlations.
        let mut same = 0.0;
        let mut sq_a = 0.0;
        let mut sq_b = 0.0;
        for i in 0..n {
            same += pa[i] * pa[i] * pb[i] * pb[i];
            sq_a += pa[i] * pa[i];
            sq_b += pb[i] * pb[i];
        }
        let cross = sq_a * sq_b - same;
        let mut total1 = 0.0;
        for x in 0..m {
            total1 += phi.values[x * n];
        }
        sums[0] += dot;
        sums[1] += pa[0] * pb[0];
        sums[2] += if n >= 2 { pa[0] * pb[1] } else { 0.0 };
        sums[3] += same / n as f64;
        sums[4] += if n >= 2 { cross / (n * (n - 1)) as f64 } else { 0.0 };
        sums[5] += aa;
        sums[6] += pa[0] * total1;
        sums[7] += sq_a / n as f64;
        sums[8] += sq_b / n as f64;
        sums[9] += sq_a * sq_b;
    }
    let k = sweeps.max(1) as f64;
    let mean = |i: usize| sums[i] / k;
    // ⟨(φ^i_a)²⟩⟨(φ^j_b)²⟩ is component independent, so both truncations
    // subtract the product of component-averaged squares.
    let prod = mean(7) * mean(8);
    let cross_prod = if n >= 2 { prod } else { 0.0 };
    Phi4Chain {
        values: [
            mean(0),
            mean(1),
            mean(2),
            mean(3) - prod,
            mean(4) - cross_prod,
            mean(5),
            mean(6),
        ],
        sweeps,
        acceptance: acc as f64 / (k * m as f64),
        width,
    }
}

/// Merge chains (fixed order) into a bundle.
pub fn merge_phi4_chains(chains: &[Phi4Chain], seed: u64) -> Result<Phi4Bundle> {
    let mut estimates = Vec::new();
    for (i, name) in PHI4_OBSERVABLES.iter().enumerate() {
        let tallies: Vec<Tally> = chains
            .iter()
            .map(|c| Tally { sum: c.values[i] * c.sweeps as f64, count: c.sweeps, max_abs: 0.0 })
            .collect();
        estimates.push((String::from(*name), McEstimate::from_tallies(&tallies, seed)?));
    }
    let k = chains.len() as f64;
    Ok(Phi4Bundle {
        estimates,
        acceptance: chains.iter().map(|c| c.acceptance).sum::<f64>() / k,
        width: chains.iter().map(|c| c.width).sum::<f64>() / k,
    })
}

/// Number of chains used by [`phi4_mc`].
pub const PHI4_CHAINS: usize = 32;

/// Metropolis estimates of two-point, squares-correlation and
/// susceptibility observables at sites `a`, `b`.
pub fn phi4_mc(
    lat: &TorusLattice,
    params: &Phi4Params,
    a: usize,
    b: usize,
    sweeps: u64,
    therm: u64,
    seed: u64,
) -> Result<Phi4Bundle> {
    params.validate()?;
    if a >= lat.num_sites() || b >= lat.num_sites() {
        return Err(invalid("site index outside the torus"));
    }
    if sweeps < PHI4_CHAINS as u64 {
        return Err(invalid(alloc::format!("sweeps must be >= {PHI4_CHAINS}")));
    }
    const { assert!(PHI4_CHAINS >= MIN_BATCHES) };
    let per = crate::models::mc::split_samples(sweeps, PHI4_CHAINS);
    let chains: Vec<Phi4Chain> = per
        .iter()
        .enumerate()
        .map(|(c, &s)| phi4_chain(lat, params, a, b, s, therm, seed, c as u64))
        .collect();
    merge_phi4_chains(&chains, seed)
}

/// Moments available from the one-site oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OneSiteMoment {
    /// ⟨|φ|²⟩
    PhiSq,
    /// ⟨(φ¹)²⟩
    Phi1Sq,
    /// ⟨(φ¹)⁴⟩
    Phi1Fourth,
    /// ⟨(φ¹)²(φ²)²⟩
    Phi1SqPhi2Sq,
    /// ⟨(φ¹)²;(φ¹)²⟩
    SameCov,
    /// ⟨(φ¹)²;(φ²)²⟩
    CrossCov,
}

/// `ln ∫_0^∞ r^{n-1+k} e^{-g r⁴/4 - ν r²/2} dr`.
fn log_radial_moment(n: usize, g: f64, nu: f64, k: u32) -> Result<f64> {
    let pw = (n as i32 - 1 + k as i32) as f64;
    let log_f = |r: f64| if r <= 0.0 { f64::NEG_INFINITY } else { pw * libm::log(r) - 0.25 * g * r * r * r * r - 0.5 * nu * r * r };
    // Upper limit where the integrand is negligible relative to its peak.
    let mut peak_val = f64::NEG_INFINITY;
    let mut r = 1e-3;
    while r < 1e3 {
        peak_val = peak_val.max(log_f(r));
        r *= 1.05;
    }
    let mut hi = 1.0;
    while log_f(hi) > peak_val - 60.0 || hi < 1.0 {
        hi *= 1.25;
        if hi > 1e6 {
            return Err(domain("radial integral does not converge"));
        }
    }
    let v = integrate(|r| libm::exp(log_f(r) - peak_val), 0.0, hi, 0.0, 1e-14, 4000)?.value;
    Ok(libm::log(v) + peak_val)
}

/// One-site moments via `∫ r^{n-1+k} e^{-g r⁴/4 - ν r²/2} dr` and the
/// angular averages `E[u₁²] = 1/n`, `E[u₁⁴] = 3/(n(n+2))`,
/// `E[u₁²u₂²] = 1/(n(n+2))`.
pub fn phi4_onesite_oracle(n: usize, g: f64, nu: f64, which: OneSiteMoment) -> Result<f64> {
    Phi4Params { n, g, nu }.validate()?;
    let z0 = log_radial_moment(n, g, nu, 0)?;
    let r2 = libm::exp(log_radial_moment(n, g, nu, 2)? - z0);
    let r4 = libm::exp(log_radial_moment(n, g, nu, 4)? - z0);
    let nf = n as f64;
    let need_two = || if n < 2 { Err(invalid("moment needs n >= 2")) } else { Ok(()) };
    Ok(match which {
        OneSiteMoment::PhiSq => r2,
        OneSiteMoment::Phi1Sq => r2 / nf,
        OneSiteMoment::Phi1Fourth => 3.0 * r4 / (nf * (nf + 2.0)),
        OneSiteMoment::Phi1SqPhi2Sq => {
            need_two()?;
            r4 / (nf * (nf + 2.0))
        }
        OneSiteMoment::SameCov => 3.0 * r4 / (nf * (nf + 2.0)) - (r2 / nf) * (r2 / nf),
        OneSiteMoment::CrossCov => {
            need_two()?;
            r4 / (nf * (nf + 2.0)) - (r2 / nf) * (r2 / nf)
        }
    })
}
