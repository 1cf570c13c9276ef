//! Monte Carlo plumbing: per-chain random streams and batch-means
//! estimates.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Minimum number of batches (chains) behind every estimate.
pub const MIN_BATCHES: usize = 16;

/// Counter-based generator for chain `chain` of a run seeded with `seed`.
/// Streams are disjoint, so results do not depend on how chains are
/// scheduled.
pub fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

/// Exponential variate with the given rate.
pub fn exponential<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.gen();
    -libm::log1p(-u) / rate
}

/// Accumulated sums of one chain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub sum: f64,
    pub count: u64,
    /// Largest single contribution, used by the heavy-tail heuristic.
    pub max_abs: f64,
}

impl Tally {
    pub fn push(&mut self, x: f64) {
        self.sum += x;
        self.count += 1;
        let a = x.abs();
        if a > self.max_abs {
            self.max_abs = a;
        }
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }
}

/// Mean with batch-means standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
    pub seed: u64,
    /// Per-batch means in chain order.
    pub batches: Vec<f64>,
    /// Set when the nonconvergence heuristic tripped (one sample carries a
    /// large share of the total, or the batch spread grows along the run).
    pub flagged: bool,
}

impl McEstimate {
    /// Merge chain tallies in the given (fixed) order.
    pub fn from_tallies(tallies: &[Tally], seed: u64) -> Result<Self> {
        if tallies.len() < MIN_BATCHES {
            return Err(invalid(alloc::format!(
                "need at least {MIN_BATCHES} batches, got {}",
                tallies.len()
            )));
        }
        let count: u64 = tallies.iter().map(|t| t.count).sum();
        if count == 0 {
            return Err(invalid("no samples"));
        }
        let total: f64 = tallies.iter().map(|t| t.sum).sum();
        let mean = total / count as f64;
        let batches: Vec<f64> = tallies.iter().map(Tally::mean).collect();
        let b = tallies.len() as f64;
        let var: f64 = tallies
            .iter()
            .map(|t| {
                let w = t.count as f64 * b / count as f64;
                w * w * (t.mean() - mean) * (t.mean() - mean)
            })
            .sum::<f64>()
            / (b - 1.0);
        let stderr = libm::sqrt(var / b);
        let max_abs = tallies.iter().map(|t| t.max_abs).fold(0.0, f64::max);
        let abs_total: f64 = tallies.iter().map(|t| t.sum.abs()).sum();
        let half = tallies.len() / 2;
        let spread = |ts: &[f64]| {
            let m = ts.iter().sum::<f64>() / ts.len() as f64;
            ts.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / ts.len() as f64
        };
        let early = spread(&batches[..half]);
        let late = spread(&batches[half..]);
        let heavy = abs_total > 0.0 && max_abs > 0.1 * abs_total;
        let growing = early > 0.0 && late > 16.0 * early;
        Ok(McEstimate { mean, stderr, count, seed, batches, flagged: heavy || growing })
    }

    /// `|self - target| ≤ k·stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }

    /// Number of standard errors between the estimate and `target`.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.stderr == 0.0 {
            if self.mean == target {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - target) / self.stderr
        }
    }
}

/// Split `samples` into `chains` nearly equal counts (first chains take the
/// remainder).
pub fn split_samples(samples: u64, chains: usize) -> Vec<u64> {
    let c = chains as u64;
    (0..c).map(|i| samples / c + u64::from(i < samples % c)).collect()
}
