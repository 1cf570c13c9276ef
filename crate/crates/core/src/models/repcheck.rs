//! Equality of the Gaussian (permanent) side and the walk side on tiny tori.

use alloc::string::String;
use alloc::vec::Vec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::greens::{green_torus_exact, neumann_green};
use crate::lattice::TorusLattice;
use crate::models::network::watermelon_mc;
use crate::models::tiny::{required_n_max, wsaw_tiny_oracle};
use crate::models::wick::wick_permanent;

/// One comparison with its margin (|lhs - rhs| over the allowance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Ratio of the observed discrepancy to the allowed one; ≤ 1 passes.
    pub margin: f64,
    pub pass: bool,
}

impl CheckLine {
    pub fn new(name: String, lhs: f64, rhs: f64, allowed: f64) -> Self {
        let margin = if allowed > 0.0 { (lhs - rhs).abs() / allowed } else if lhs == rhs { 0.0 } else { f64::INFINITY };
        CheckLine { name, lhs, rhs, margin, pass: margin <= 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationReport {
    pub lines: Vec<CheckLine>,
}

impl RepresentationReport {
    pub fn pass(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }
}

/// Monte Carlo budget of the `g > 0` branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McBudget {
    pub samples: u64,
    pub seed: u64,
}

/// Compare both sides of the walk representation for every pair `(a, b)`.
///
/// At `g = 0`: the permanent of the dense inverse against the tiny oracle
/// (and, for `p = 1`, the Neumann series) to `tol`. At `g > 0`: the oracle
/// against [`watermelon_mc`] within 3σ (one rerun with 4× samples), plus
/// strict decrease of the oracle relative to `g = 0`.
pub fn representation_check(
    lat: &TorusLattice,
    g: f64,
    nu: f64,
    p: u32,
    tol: f64,
    mc: Option<McBudget>,
) -> Result<RepresentationReport> {
    if lat.num_sites() > 3 {
        return Err(invalid("representation check needs at most 3 sites"));
    }
    if !(1..=2).contains(&p) {
        return Err(invalid("representation check supports p in {1, 2}"));
    }
    let m = lat.num_sites();
    let n_max = required_n_max(lat.dim(), nu, p, 0.1 * tol);
    let mut lines = Vec::new();
    if g == 0.0 {
        let green = green_torus_exact(lat, nu)?;
        let crate::greens::GreenTable::Torus { matrix, .. } = &green else { unreachable!() };
        let v = alloc::vec![Complex64::new(nu, 0.0); m];
        let neumann = if p == 1 { Some(neumann_green(lat, &v, 1 << 20, 0.1 * tol)?) } else { None };
        for a in 0..m {
            for b in 0..m {
                let pa = alloc::vec![a; p as usize];
                let pb = alloc::vec![b; p as usize];
                let gauss = wick_permanent(matrix, &pa, &pb)?;
                let walk = wsaw_tiny_oracle(lat, 0.0, nu, a, Some(b), p, n_max, 0.1 * tol)?.value;
                lines.push(CheckLine::new(alloc::format!("perm-vs-oracle p={p} a={a} b={b}"), gauss, walk, tol));
                if let Some(nr) = &neumann {
                    lines.push(CheckLine::new(
                        alloc::format!("perm-vs-neumann p=1 a={a} b={b}"),
                        gauss,
                        nr.matrix[(a, b)].re,
                        tol,
                    ));
                }
            }
        }
    } else {
        let budget = mc.ok_or_else(|| invalid("g > 0 needs a Monte Carlo budget"))?;
        for a in 0..m {
            for b in 0..m {
                let exact = wsaw_tiny_oracle(lat, g, nu, a, Some(b), p, n_max, 0.1 * tol)?.value;
                let free = wsaw_tiny_oracle(lat, 0.0, nu, a, Some(b), p, n_max, 0.1 * tol)?.value;
                let mut est = watermelon_mc(lat, g, nu, a, b, p, budget.samples, budget.seed)?;
                if !est.within(exact, 3.0) {
                    est = watermelon_mc(lat, g, nu, a, b, p, 4 * budget.samples, budget.seed ^ 0x5eed)?;
                }
                lines.push(CheckLine::new(
                    alloc::format!("oracle-vs-mc g={g} p={p} a={a} b={b}"),
                    exact,
                    est.mean,
                    3.0 * est.stderr,
                ));
                let decrease = exact < free;
                lines.push(CheckLine {
                    name: alloc::format!("strict decrease in g a={a} b={b}"),
                    lhs: exact,
                    rhs: free,
                    margin: if decrease { 0.0 } else { f64::INFINITY },
                    pass: decrease,
                });
            }
        }
    }
    Ok(RepresentationReport { lines })
}
