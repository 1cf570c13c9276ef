use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};

/// Eigenspace choice: `E⁺ = span(1,…,1)` or `E⁻ = (E⁺)^⊥`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> char {
        match self {
            Branch::Plus => '+',
            Branch::Minus => '-',
        }
    }
}

fn pairs(p: u32) -> f64 {
    let p = p as f64;
    p * (p - 1.0) / 2.0
}

/// Logarithmic exponent `γ^±_{n,p}`: `C(p,2)(n+2)/(n+8)` on `E⁺`,
/// `C(p,2)·2/(n+8)` on `E⁻`. For `n = 0` both equal `C(p,2)/4`; `n = 1`
/// has no `E⁻`.
pub fn gamma_exponent(n: usize, p: u32, branch: Branch) -> Result<f64> {
    if p < 1 {
        return Err(invalid("p must be >= 1"));
    }
    let c = pairs(p);
    let nf = n as f64;
    match (n, branch) {
        (0, _) => Ok(c / 4.0),
        (1, Branch::Minus) => Err(invalid("n = 1 has no E- eigenspace")),
        (_, Branch::Plus) => Ok(c * (nf + 2.0) / (nf + 8.0)),
        (_, Branch::Minus) => Ok(c * 2.0 / (nf + 8.0)),
    }
}

/// `ḡ - β ḡ²`.
pub fn gbar_step(gbar: f64, beta: f64) -> Result<f64> {
    if !(gbar > 0.0) {
        return Err(invalid("gbar must be > 0"));
    }
    let next = gbar - beta * gbar * gbar;
    if !(next > 0.0) {
        return Err(domain("gbar left (0, ∞)"));
    }
    Ok(next)
}

/// `χ_j = Ω^{-(j - j_m)₊}`.
pub fn chi(j: u32, j_m: Option<i32>, omega: f64) -> Result<f64> {
    if !(omega > 1.0) {
        return Err(invalid("Omega must be > 1"));
    }
    Ok(crate::lattice::chi_factor(omega, j, j_m))
}

/// `r·I + s·J` on ℝⁿ (`J` the all-ones matrix). For `n ∈ {0, 1}` the
/// matrix is the scalar `r + s`, stored with `s = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct M2Matrix {
    pub n: usize,
    pub r: f64,
    pub s: f64,
}

impl M2Matrix {
    pub fn identity(n: usize) -> Self {
        M2Matrix { n, r: 1.0, s: 0.0 }
    }

    /// Vector length the matrix acts on.
    pub fn size(&self) -> usize {
        self.n.max(1)
    }

    /// Eigenvalue on `e⁺`.
    pub fn eigen_plus(&self) -> f64 {
        self.r + self.size() as f64 * self.s
    }

    /// Eigenvalue on `(e⁺)^⊥`.
    pub fn eigen_minus(&self) -> f64 {
        self.r
    }

    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        let sum: f64 = h.iter().sum();
        h.iter().map(|&x| self.r * x + self.s * sum).collect()
    }

    pub fn mul(&self, other: &M2Matrix) -> M2Matrix {
        let n = self.size() as f64;
        M2Matrix {
            n: self.n,
            r: self.r * other.r,
            s: self.r * other.s + self.s * other.r + n * self.s * other.s,
        }
    }
}

/// The matrix `T` whose eigenvalues are `γ^±_{n,p}`.
pub fn t_matrix(n: usize, p: u32) -> M2Matrix {
    let c = pairs(p);
    let nf = n as f64;
    match n {
        0 => M2Matrix { n, r: c / 4.0, s: 0.0 },
        1 => M2Matrix { n, r: c / 3.0, s: 0.0 },
        _ => M2Matrix { n, r: c * 2.0 / (nf + 8.0), s: c / (nf + 8.0) },
    }
}

/// `A_j = (1 - pδ)I - βgT` below coalescence, `I` otherwise.
pub fn a_matrix(
    n: usize,
    p: u32,
    g: f64,
    delta_nu_w1: f64,
    beta: f64,
    below_coalescence: bool,
) -> M2Matrix {
    if !below_coalescence {
        return M2Matrix::identity(n);
    }
    let t = t_matrix(n, p);
    M2Matrix {
        n,
        r: 1.0 - p as f64 * delta_nu_w1 - beta * g * t.r,
        s: -beta * g * t.s,
    }
}

/// `f_j^± = 1 - pδ - βgγ^±` below coalescence, 1 otherwise.
pub fn eigen_f(
    n: usize,
    p: u32,
    branch: Branch,
    g: f64,
    delta_nu_w1: f64,
    beta: f64,
    below_coalescence: bool,
) -> Result<f64> {
    let gamma = gamma_exponent(n, p, branch)?;
    if !below_coalescence {
        return Ok(1.0);
    }
    Ok(1.0 - p as f64 * delta_nu_w1 - beta * g * gamma)
}
