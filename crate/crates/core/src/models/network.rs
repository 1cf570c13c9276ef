//! Monte Carlo for watermelon and star networks of `p` interacting walks.
//!
//! Each duration `T_k` is drawn from an exponential proposal and the walk
//! run for that time; the sample weight is
//! `p! Π_k e^{-νT_k}/q(T_k) · e^{-g I_p} · 1{all walks end at b}`.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::lattice::TorusLattice;
use crate::models::mc::{chain_rng, exponential, split_samples, McEstimate, Tally};
use crate::models::walk::{simulate_walk, WalkPath};
use crate::special::factorial;

/// Number of independent chains (and batches) used by default.
pub const DEFAULT_CHAINS: usize = 64;

/// Interaction, mass and walk count of a network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    pub g: f64,
    pub nu: f64,
    pub p: u32,
}

impl NetworkParams {
    /// Check that the T-integral converges on `lat`: `ν > 0` when `g = 0`,
    /// any `ν` when `g > 0` (the bound `I ≥ T²/|Λ|` controls the tail).
    pub fn validate(&self, lat: &TorusLattice) -> Result<()> {
        if self.p < 1 {
            return Err(invalid("p must be >= 1"));
        }
        if !(self.g >= 0.0) || !self.g.is_finite() || !self.nu.is_finite() {
            return Err(invalid("g must be >= 0 and nu finite"));
        }
        if self.g == 0.0 && self.nu <= 0.0 {
            return Err(invalid("g = 0 requires nu > 0"));
        }
        let _ = lat;
        Ok(())
    }

    /// Rate of the exponential proposal for each `T_k`: `ν/2` when `ν > 0`,
    /// otherwise `√(g/|Λ|)`, the inverse time scale set by the interaction.
    pub fn proposal_rate(&self, lat: &TorusLattice) -> f64 {
        if self.nu > 0.0 {
            0.5 * self.nu
        } else {
            libm::sqrt(self.g / lat.num_sites() as f64)
        }
    }
}

/// One sampled network with its weight.
#[derive(Debug, Clone)]
pub struct NetworkSample {
    pub paths: Vec<WalkPath>,
    pub intersection: f64,
    pub weight: f64,
}

/// Draw one network from `a`; `b = None` drops the endpoint constraint.
/// Walks are sampled even when an earlier walk misses `b`, so that the
/// returned configuration is always complete.
pub fn sample_network<R: rand::Rng>(
    lat: &TorusLattice,
    params: &NetworkParams,
    a: usize,
    b: Option<usize>,
    rng: &mut R,
) -> NetworkSample {
    let rate = params.proposal_rate(lat);
    let mut paths = Vec::with_capacity(params.p as usize);
    let mut log_w = libm::log(factorial(params.p));
    let mut hit = true;
    for _ in 0..params.p {
        let t = exponential(rng, rate);
        log_w += (rate - params.nu) * t - libm::log(rate);
        let w = simulate_walk(lat, a, t, rng);
        if let Some(b) = b {
            hit &= w.end() == b;
        }
        paths.push(w);
    }
    let mut l = alloc::vec![0.0; lat.num_sites()];
    for w in &paths {
        w.add_local_times(&mut l);
    }
    let intersection: f64 = l.iter().map(|v| v * v).sum();
    let weight = if hit { libm::exp(log_w - params.g * intersection) } else { 0.0 };
    NetworkSample { paths, intersection, weight }
}

/// Tally of one chain; chains are independent streams of `seed`.
pub fn network_chain(
    lat: &TorusLattice,
    params: &NetworkParams,
    a: usize,
    b: Option<usize>,
    samples: u64,
    seed: u64,
    chain: u64,
) -> Tally {
    let mut rng = chain_rng(seed, chain);
    let mut tally = Tally::default();
    for _ in 0..samples {
        tally.push(sample_network(lat, params, a, b, &mut rng).weight);
    }
    tally
}

fn check_sites(lat: &TorusLattice, sites: &[usize]) -> Result<()> {
    if sites.iter().any(|&s| s >= lat.num_sites()) {
        return Err(invalid("site index outside the torus"));
    }
    Ok(())
}

fn network_mc(
    lat: &TorusLattice,
    params: &NetworkParams,
    a: usize,
    b: Option<usize>,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    params.validate(lat)?;
    check_sites(lat, &[a])?;
    if let Some(b) = b {
        check_sites(lat, &[b])?;
    }
    if samples < DEFAULT_CHAINS as u64 {
        return Err(invalid(alloc::format!("samples must be >= {DEFAULT_CHAINS}")));
    }
    let tallies: Vec<Tally> = split_samples(samples, DEFAULT_CHAINS)
        .into_iter()
        .enumerate()
        .map(|(c, n)| network_chain(lat, params, a, b, n, seed, c as u64))
        .collect();
    McEstimate::from_tallies(&tallies, seed)
}

/// Estimate of `p! ∫ E_a[e^{-gI_p} 1{X(T)=b}] e^{-ν‖T‖₁} dT`.
pub fn watermelon_mc(
    lat: &TorusLattice,
    g: f64,
    nu: f64,
    a: usize,
    b: usize,
    p: u32,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    network_mc(lat, &NetworkParams { g, nu, p }, a, Some(b), samples, seed)
}

/// Estimate of `p! ∫ E_a[e^{-gI_p}] e^{-ν‖T‖₁} dT` (free endpoints).
pub fn star_mc(
    lat: &TorusLattice,
    g: f64,
    nu: f64,
    p: u32,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    network_mc(lat, &NetworkParams { g, nu, p }, 0, None, samples, seed)
}
