//! Continuous-time simple random walks on a torus and their local times.

use alloc::vec::Vec;
use rand::Rng;

use crate::lattice::TorusLattice;
use crate::models::mc::exponential;

/// A walk path: visited sites and the holding time at each.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkPath {
    pub sites: Vec<usize>,
    pub holds: Vec<f64>,
}

impl WalkPath {
    pub fn total_time(&self) -> f64 {
        self.holds.iter().sum()
    }

    pub fn end(&self) -> usize {
        *self.sites.last().expect("walk path has at least one site")
    }

    /// Local time `L_T(x)` as a dense vector over the torus.
    pub fn local_times(&self, num_sites: usize) -> Vec<f64> {
        let mut l = alloc::vec![0.0; num_sites];
        self.add_local_times(&mut l);
        l
    }

    pub fn add_local_times(&self, l: &mut [f64]) {
        for (&x, &h) in self.sites.iter().zip(&self.holds) {
            l[x] += h;
        }
    }

    /// Check that consecutive sites are nearest neighbours of `lat`.
    pub fn is_nearest_neighbour_path(&self, lat: &TorusLattice) -> bool {
        self.sites
            .windows(2)
            .all(|w| lat.neighbours(w[0]).contains(&w[1]))
    }
}

/// Run the rate-`2d` walk from `start` for time `t`.
pub fn simulate_walk<R: Rng>(lat: &TorusLattice, start: usize, t: f64, rng: &mut R) -> WalkPath {
    let rate = 2.0 * lat.dim() as f64;
    let mut sites = alloc::vec![start];
    let mut holds = Vec::new();
    let mut x = start;
    let mut elapsed = 0.0;
    loop {
        let h = exponential(rng, rate);
        if elapsed + h >= t {
            holds.push(t - elapsed);
            break;
        }
        holds.push(h);
        elapsed += h;
        let nb = lat.neighbours(x);
        x = nb[rng.gen_range(0..nb.len())];
        sites.push(x);
    }
    WalkPath { sites, holds }
}

/// `I_p = Σ_x (Σ_k L^k(x))²`.
pub fn intersection_local_time(num_sites: usize, paths: &[WalkPath]) -> f64 {
    let mut l = alloc::vec![0.0; num_sites];
    for p in paths {
        p.add_local_times(&mut l);
    }
    l.iter().map(|v| v * v).sum()
}
