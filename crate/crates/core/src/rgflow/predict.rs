use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::algebra::Branch;
use super::flow::FlowTrace;
use crate::error::{invalid, Result};
use crate::special::factorial;

/// Leading-order `q_∞ = p! λ_{a,j_ab} λ_{b,j_ab} G^p_{ab}(m²)`.
pub fn q_infinity(trace: &FlowTrace, green_ab: f64) -> Result<f64> {
    let j_ab = trace.j_ab.ok_or_else(|| invalid("q_infinity needs a two-point trace"))?;
    let rec = trace
        .record(j_ab)
        .ok_or_else(|| invalid("trace stops before the coalescence scale"))?;
    let p = trace.config.p;
    Ok(factorial(p) * rec.lambda_a * rec.lambda_b * libm::pow(green_ab, p as f64))
}

/// Energy-pair amplitudes for `n ≥ 2`, `p = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationAmplitudes {
    pub a_plus: f64,
    pub a_minus: f64,
    /// `⟨(φ¹_a)²; (φ¹_b)²⟩`
    pub same: f64,
    /// `⟨(φ¹_a)²; (φ²_b)²⟩`
    pub cross: f64,
    /// `⟨|φ_a|²; |φ_b|²⟩`
    pub energy: f64,
}

impl CorrelationAmplitudes {
    pub fn ratio(&self) -> f64 {
        self.cross / self.same
    }
}

/// Combine the `E⁺` and `E⁻` traces: with `A^± = q_∞^±`,
/// same `= (A⁺ + (n-1)A⁻)/n`, cross `= (A⁺ - A⁻)/n`, energy `= nA⁺`.
pub fn predict_correlations(plus: &FlowTrace, minus: &FlowTrace, green_ab: f64) -> Result<CorrelationAmplitudes> {
    let (cp, cm) = (&plus.config, &minus.config);
    if cp.branch != Branch::Plus || cm.branch != Branch::Minus {
        return Err(invalid("need one + and one - trace"));
    }
    if cp.n < 2 || cp.p != 2 {
        return Err(invalid("correlation amplitudes need n >= 2 and p = 2"));
    }
    if (cp.n, cp.l, cp.m2, cp.g0, &cp.separation) != (cm.n, cm.l, cm.m2, cm.g0, &cm.separation) || cm.p != 2 {
        return Err(invalid("traces do not share (n, L, m2, g0, a-b)"));
    }
    let a_plus = q_infinity(plus, green_ab)?;
    let a_minus = q_infinity(minus, green_ab)?;
    let n = cp.n as f64;
    Ok(CorrelationAmplitudes {
        a_plus,
        a_minus,
        same: (a_plus + (n - 1.0) * a_minus) / n,
        cross: (a_plus - a_minus) / n,
        energy: n * a_plus,
    })
}

/// One-point (star) normalisation `χ^{-p} S^{(p)}` at leading order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarPrediction {
    /// `p! λ*_J` read off the trace.
    pub ratio: f64,
    /// Estimated `v = λ*_J / Γ_J`.
    pub v: f64,
    /// `g_J`, the trace's estimate of `g_∞`.
    pub g_inf: f64,
    /// `p! v (1/(B g₀))^γ` when a bubble value is supplied.
    pub ratio_bubble: Option<f64>,
}

/// Star ratio from a trace run with `λ_{b,0} = 0` and no pair.
pub fn predict_star_ratio(trace: &FlowTrace, bubble: Option<f64>) -> Result<StarPrediction> {
    let c = &trace.config;
    if c.separation.is_some() || c.lambda_b0 != 0.0 {
        return Err(invalid("star ratio needs lambda_b0 = 0 and no pair"));
    }
    let last = trace.last();
    let pf = factorial(c.p);
    let v = last.lambda_a / last.gamma_ratio;
    let ratio_bubble = match bubble {
        Some(b) if b > 0.0 && c.g0 > 0.0 => Some(pf * v * libm::pow(1.0 / (b * c.g0), trace.gamma)),
        Some(_) => return Err(invalid("bubble and g0 must be > 0")),
        None => None,
    };
    Ok(StarPrediction { ratio: pf * last.lambda_a, v, g_inf: last.g, ratio_bubble })
}

/// Massive two-point function with its error budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassiveTwoPoint {
    pub value: f64,
    /// `χ_{j_ab} ḡ_{j_ab} G_{ab}(0)`.
    pub error_budget: f64,
}

/// `G_{ab}(g, ν) ≈ G_{ab}(0, m²)` plus the budget `χ_{j_ab}ḡ_{j_ab}G_{ab}(0,0)`.
pub fn predict_massive_twopoint(green_m: f64, green_0: f64, trace: &FlowTrace) -> Result<MassiveTwoPoint> {
    if trace.config.p != 1 {
        return Err(invalid("two-point prediction needs a p = 1 trace"));
    }
    let j_ab = trace.j_ab.ok_or_else(|| invalid("two-point prediction needs a pair"))?;
    let rec = trace
        .record(j_ab)
        .ok_or_else(|| invalid("trace stops before the coalescence scale"))?;
    Ok(MassiveTwoPoint { value: green_m, error_budget: rec.chi * rec.gbar * green_0 })
}

/// Fit of `y = A (log x)^{-γ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub exponent: f64,
    pub amplitude: f64,
    /// Largest `|y_fit/y - 1|`.
    pub residual: f64,
}

/// Least squares of `log y` against `log log x`; points are `(log x, y)`
/// so that astronomically large `x` can be used.
pub fn fit_log_exponent(points: &[(f64, f64)]) -> Result<LogFit> {
    if points.len() < 4 {
        return Err(invalid("need at least 4 points"));
    }
    if points.iter().any(|&(lx, y)| !(lx > 1.0) || !(y > 0.0)) {
        return Err(invalid("need x > e and y > 0"));
    }
    let u: Vec<f64> = points.iter().map(|&(lx, _)| libm::log(lx)).collect();
    let v: Vec<f64> = points.iter().map(|&(_, y)| libm::log(y)).collect();
    let m = u.len() as f64;
    let (mu, mv) = (u.iter().sum::<f64>() / m, v.iter().sum::<f64>() / m);
    let suu: f64 = u.iter().map(|x| (x - mu) * (x - mu)).sum();
    if suu == 0.0 {
        return Err(invalid("points need distinct x"));
    }
    let suv: f64 = u.iter().zip(&v).map(|(x, y)| (x - mu) * (y - mv)).sum();
    let slope = suv / suu;
    let intercept = mv - slope * mu;
    let residual = u
        .iter()
        .zip(&v)
        .map(|(x, y)| libm::fabs(libm::expm1(intercept + slope * x - y)))
        .fold(0.0, f64::max);
    Ok(LogFit { exponent: -slope, amplitude: libm::exp(intercept), residual })
}

/// A point of the constant-`β` recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeepPoint {
    pub j: u64,
    pub g: f64,
    /// `Π_{i<j} (1 - β g_i γ)`.
    pub lambda: f64,
}

/// `g_{j+1} = g_j - βg_j²`, `λ_{j+1} = (1 - βg_jγ)λ_j` with constant `β`,
/// sampled at the requested (increasing) scales. Used to probe scales far
/// beyond what a decomposition can represent.
pub fn constant_beta_flow(beta: f64, g0: f64, gamma: f64, scales: &[u64]) -> Result<Vec<DeepPoint>> {
    if !(beta > 0.0) || !(g0 > 0.0) || beta * g0 >= 1.0 {
        return Err(invalid("need beta > 0, g0 > 0, beta*g0 < 1"));
    }
    if scales.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("scales must be increasing"));
    }
    let mut out = Vec::with_capacity(scales.len());
    let (mut g, mut log_lambda) = (g0, 0.0);
    let mut j = 0u64;
    for &target in scales {
        while j < target {
            log_lambda += libm::log1p(-beta * g * gamma);
            g -= beta * g * g;
            j += 1;
        }
        out.push(DeepPoint { j, g, lambda: libm::exp(log_lambda) });
    }
    Ok(out)
}
