//! Chain-parallel versions of the core Monte Carlo drivers.
//!
//! Chains are independent streams of one seed and are merged in chain
//! order, so results equal the sequential core functions bit for bit at
//! any thread count.

use critlog_core::error::Error;
use critlog_core::lattice::TorusLattice;
use critlog_core::models::mc::split_samples;
use critlog_core::models::network::{network_chain, DEFAULT_CHAINS};
use critlog_core::models::phi4::{merge_phi4_chains, phi4_chain, PHI4_CHAINS};
use critlog_core::models::{McEstimate, NetworkParams, Phi4Bundle, Phi4Params};
use rayon::prelude::*;

fn check_sites(lat: &TorusLattice, sites: &[usize]) -> critlog_core::Result<()> {
    if sites.iter().any(|&s| s >= lat.num_sites()) {
        return Err(Error::InvalidArgument("site index outside the torus".into()));
    }
    Ok(())
}

/// Same result as `watermelon_mc` (`b = Some`) or `star_mc` (`b = None`,
/// `a = 0`).
pub fn network_mc(
    lat: &TorusLattice,
    params: &NetworkParams,
    a: usize,
    b: Option<usize>,
    samples: u64,
    seed: u64,
) -> critlog_core::Result<McEstimate> {
    params.validate(lat)?;
    check_sites(lat, &[a])?;
    if let Some(b) = b {
        check_sites(lat, &[b])?;
    }
    if samples < DEFAULT_CHAINS as u64 {
        return Err(Error::InvalidArgument(format!("samples must be >= {DEFAULT_CHAINS}")));
    }
    let tallies: Vec<_> = split_samples(samples, DEFAULT_CHAINS)
        .into_par_iter()
        .enumerate()
        .map(|(c, n)| network_chain(lat, params, a, b, n, seed, c as u64))
        .collect();
    McEstimate::from_tallies(&tallies, seed)
}

/// Same result as `phi4_mc`.
pub fn phi4_mc(
    lat: &TorusLattice,
    params: &Phi4Params,
    a: usize,
    b: usize,
    sweeps: u64,
    therm: u64,
    seed: u64,
) -> critlog_core::Result<Phi4Bundle> {
    params.validate()?;
    check_sites(lat, &[a, b])?;
    if sweeps < PHI4_CHAINS as u64 {
        return Err(Error::InvalidArgument(format!("sweeps must be >= {PHI4_CHAINS}")));
    }
    let chains: Vec<_> = split_samples(sweeps, PHI4_CHAINS)
        .into_par_iter()
        .enumerate()
        .map(|(c, s)| phi4_chain(lat, params, a, b, s, therm, seed, c as u64))
        .collect();
    merge_phi4_chains(&chains, seed)
}
