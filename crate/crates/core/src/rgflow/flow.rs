use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::algebra::{a_matrix, gamma_exponent, Branch};
use crate::covariance::{delta_op, DeltaFunctional, Decomposition, PairProfile};
use crate::error::{invalid, Result};
use crate::lattice::{chi_factor, coalescence_scale, mass_scale};
use crate::special::factorial;

/// Bulk couplings at one scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulkCouplings {
    pub g: f64,
    pub nu: f64,
    pub gbar: f64,
}

/// Observable couplings at the two points `a`, `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableCouplings {
    /// Unit vector in ℝⁿ (length 1 for `n ∈ {0, 1}`).
    pub h: Vec<f64>,
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub q_a: f64,
    pub q_b: f64,
    pub t_a: f64,
    pub t_b: f64,
}

impl ObservableCouplings {
    /// Initial observable couplings `λ_a = 1`, `λ_b = lambda_b0`,
    /// `q = t = 0`, `h` the unit vector of the chosen eigenspace.
    pub fn initial(n: usize, branch: Branch, lambda_b0: f64) -> Result<Self> {
        Ok(ObservableCouplings {
            h: eigen_vector(n, branch)?,
            lambda_a: 1.0,
            lambda_b: lambda_b0,
            q_a: 0.0,
            q_b: 0.0,
            t_a: 0.0,
            t_b: 0.0,
        })
    }
}

/// `h⁺ = n^{-1/2}(1,…,1)`, `h⁻ = 2^{-1/2}(1,-1,0,…)`.
fn eigen_vector(n: usize, branch: Branch) -> Result<Vec<f64>> {
    let size = n.max(1);
    match branch {
        Branch::Plus => Ok(alloc::vec![1.0 / libm::sqrt(size as f64); size]),
        Branch::Minus if n == 0 => Ok(alloc::vec![1.0]),
        Branch::Minus if n == 1 => Err(invalid("n = 1 has no E- eigenspace")),
        Branch::Minus => {
            let mut h = alloc::vec![0.0; n];
            h[0] = core::f64::consts::FRAC_1_SQRT_2;
            h[1] = -core::f64::consts::FRAC_1_SQRT_2;
            Ok(h)
        }
    }
}

/// Scale-`j` coefficients consumed by [`observable_step`]; `C = C_{j+1}`,
/// `w = w_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInputs {
    pub g: f64,
    pub nu: f64,
    pub nu_plus: f64,
    pub beta: f64,
    pub c00: f64,
    pub w1: f64,
    pub w2: f64,
    pub delta_w2: f64,
    pub delta_nu_w1: f64,
    pub delta_nu_w2: f64,
    /// `δ_j[w^p_{ab}]`.
    pub delta_wp_ab: f64,
}

/// How the bulk mass coupling is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowMode {
    /// `ν ≡ 0`, `g_{j+1} = g_j - β_j g_j²`.
    Default,
    /// Critical `ν_j` flowed by `ν⁺` with `g_{j+1} = g_j(1 - β_j g_j - 4δ_j)`.
    Extended,
}

/// Scale-`j` coefficients from the decomposition.
#[allow(clippy::too_many_arguments)]
pub fn step_inputs(
    dec: &Decomposition,
    n: usize,
    p: u32,
    j: u32,
    bulk: BulkCouplings,
    mode: FlowMode,
    pair: Option<&PairProfile>,
    j_ab: Option<u32>,
) -> Result<StepInputs> {
    let ju = j as usize;
    let beta = crate::covariance::beta_j(dec, n, j)?;
    let c00 = dec.c00[ju + 1];
    let (nu, nu_plus, delta_nu_w1, delta_nu_w2) = match mode {
        FlowMode::Default => (0.0, 0.0, 0.0, 0.0),
        FlowMode::Extended => (
            bulk.nu,
            crate::covariance::nu_plus(n, bulk.g, bulk.nu, c00),
            delta_op(dec, n, bulk.g, bulk.nu, j, DeltaFunctional::NuW1, None)?,
            delta_op(dec, n, bulk.g, bulk.nu, j, DeltaFunctional::NuW2, None)?,
        ),
    };
    let delta_wp_ab = match pair {
        Some(pr) => delta_op(dec, n, bulk.g, bulk.nu, j, DeltaFunctional::WabPow(p), Some((pr, j_ab)))?,
        None => 0.0,
    };
    Ok(StepInputs {
        g: bulk.g,
        nu,
        nu_plus,
        beta,
        c00,
        w1: dec.w1[ju],
        w2: dec.w2[ju],
        delta_w2: dec.dw2[ju],
        delta_nu_w1,
        delta_nu_w2,
        delta_wp_ab,
    })
}

/// One perturbative step of the observable couplings at scale `j`.
pub fn observable_step(
    obs: &ObservableCouplings,
    inp: &StepInputs,
    j: u32,
    j_ab: Option<u32>,
    n: usize,
    p: u32,
) -> Result<ObservableCouplings> {
    let norm: f64 = libm::sqrt(obs.h.iter().map(|x| x * x).sum());
    if norm == 0.0 {
        return Err(invalid("h must be nonzero"));
    }
    if obs.h.len() != n.max(1) {
        return Err(invalid("h has the wrong length"));
    }
    let below = j_ab.is_none_or(|jab| j + 1 < jab);
    let a = a_matrix(n, p, inp.g, inp.delta_nu_w1, inp.beta, below);
    let ah = a.apply(&obs.h);
    let ah_norm: f64 = libm::sqrt(ah.iter().map(|x| x * x).sum());
    if ah_norm == 0.0 {
        return Err(invalid("A_j h vanished"));
    }
    let h_next: Vec<f64> = ah.iter().map(|x| x / ah_norm).collect();

    let (mut q_a, mut q_b) = (obs.q_a, obs.q_b);
    if j_ab.is_some_and(|jab| j >= jab) {
        let dq = factorial(p) * obs.lambda_a * obs.lambda_b * inp.delta_wp_ab;
        q_a += dq;
        q_b += dq;
    }

    let (mut t_a, mut t_b) = (obs.t_a, obs.t_b);
    if n >= 1 && p == 2 {
        let ind = if below { 1.0 } else { 0.0 };
        let varsigma = inp.c00 * (1.0 - ind * 2.0 * inp.nu * inp.w1)
            + ind * inp.nu_plus * inp.delta_w2
            + (1.0 - ind) * inp.delta_nu_w2;
        let e_dot_h: f64 = obs.h.iter().sum();
        t_a += obs.lambda_a * e_dot_h * varsigma;
        t_b += obs.lambda_b * e_dot_h * varsigma;
    }

    Ok(ObservableCouplings {
        h: h_next,
        lambda_a: ah_norm * obs.lambda_a,
        lambda_b: ah_norm * obs.lambda_b,
        q_a,
        q_b,
        t_a,
        t_b,
    })
}

/// Flow configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub n: usize,
    pub p: u32,
    pub l: u64,
    pub m2: f64,
    pub g0: f64,
    pub branch: Branch,
    /// `b - a`; `None` runs the one-point (star) flow with `j_ab = ∞`.
    pub separation: Option<Vec<i64>>,
    /// `λ_{b,0}`, 0 or 1.
    pub lambda_b0: f64,
    pub j_max: u32,
    pub omega: f64,
    pub mode: FlowMode,
    /// Stability-window constant `C_D`.
    pub stability: f64,
}

impl FlowConfig {
    /// Two-point flow at `m² = 0` with defaults `Ω = 2`, `C_D = 2`.
    pub fn two_point(n: usize, p: u32, l: u64, g0: f64, branch: Branch, separation: Vec<i64>, j_max: u32) -> Self {
        FlowConfig {
            n,
            p,
            l,
            m2: 0.0,
            g0,
            branch,
            separation: Some(separation),
            lambda_b0: 1.0,
            j_max,
            omega: 2.0,
            mode: FlowMode::Default,
            stability: 2.0,
        }
    }
}

/// Per-step data recorded for scales `j < J_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub beta: f64,
    pub delta_nu_w1: f64,
    pub f_plus: f64,
    /// Equal to `f_plus` when no `E⁻` exists.
    pub f_minus: f64,
    /// Eigenvalue of the configured branch.
    pub f: f64,
}

/// State at scale `j` plus the step taken from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub j: u32,
    pub g: f64,
    pub nu: f64,
    pub gbar: f64,
    pub chi: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub q: f64,
    pub t_a: f64,
    pub t_b: f64,
    /// `Γ_j = (g_j/g₀)^γ`.
    pub gamma_ratio: f64,
    /// `Π_{0,j-1}`: product of the stored `f_i`, `i < j`.
    pub pi: f64,
    pub step: Option<StepRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    /// `g` or `ḡ` left `(0, ∞)`, or `g` left `(ḡ/C_D, C_D ḡ)`.
    Coupling,
    /// `f_j ≤ 0`.
    Eigenvalue,
    /// `t_j |ν_j|` exceeded `C_D g_j`.
    MassWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainExit {
    pub j: u32,
    pub reason: ExitReason,
    pub detail: String,
}

/// A complete flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub config: FlowConfig,
    pub gamma: f64,
    pub j_ab: Option<u32>,
    pub j_m: Option<i32>,
    pub records: Vec<FlowRecord>,
    /// `p!λ_aλ_b w^p_{j_ab;ab}`, the part of the pair covariance below the
    /// coalescence scale; added to `q` in the step out of `j_ab` so that
    /// `q_j = p!λ_aλ_b w^p_{j;ab}` for `j > j_ab`.
    pub gate_leak: f64,
    /// `G_{ab}(m²) - w_{J;ab}` (0 without a pair).
    pub pair_tail: f64,
    pub exit: Option<DomainExit>,
}

impl FlowTrace {
    pub fn record(&self, j: u32) -> Option<&FlowRecord> {
        self.records.get(j as usize)
    }

    pub fn last(&self) -> &FlowRecord {
        self.records.last().expect("trace has at least one record")
    }

    /// Whether the flow reached `J_max` without leaving the domain.
    pub fn completed(&self) -> bool {
        self.exit.is_none()
    }
}

/// Bulk sequences `(g_j, ν_j, ḡ_j)` for `j = 0..=J`, stopping early on a
/// domain exit.
fn bulk_flow(cfg: &FlowConfig, dec: &Decomposition) -> Result<(Vec<BulkCouplings>, Vec<f64>, Option<DomainExit>)> {
    let jm = cfg.j_max as usize;
    let n = cfg.n;
    let betas: Vec<f64> = (0..cfg.j_max)
        .map(|j| crate::covariance::beta_j(dec, n, j))
        .collect::<Result<_>>()?;
    let mut gbar = alloc::vec![cfg.g0; jm + 1];
    let mut g = alloc::vec![cfg.g0; jm + 1];
    let mut nu = alloc::vec![0.0; jm + 1];
    for j in 0..jm {
        gbar[j + 1] = gbar[j] - betas[j] * gbar[j] * gbar[j];
        g[j + 1] = gbar[j + 1];
    }
    if cfg.mode == FlowMode::Extended {
        let np2 = n as f64 + 2.0;
        for _ in 0..200 {
            nu[jm] = -np2 * g[jm] * dec.tail00;
            for j in (0..jm).rev() {
                nu[j] = nu[j + 1] - np2 * g[j] * dec.c00[j + 1];
            }
            let mut change: f64 = 0.0;
            for j in 0..jm {
                let dprime = nu[j + 1] * dec.w1[j + 1] - nu[j] * dec.w1[j];
                let next = g[j] * (1.0 - betas[j] * g[j] - 4.0 * dprime);
                if g[j + 1] != 0.0 {
                    change = change.max(libm::fabs(next / g[j + 1] - 1.0));
                }
                g[j + 1] = next;
            }
            if change < 1e-15 {
                break;
            }
        }
    }
    let mut exit = None;
    let mut len = jm + 1;
    for j in 0..=jm {
        let reason = if cfg.g0 > 0.0 && !(g[j] > 0.0 && gbar[j] > 0.0) {
            Some((ExitReason::Coupling, alloc::format!("g_{j} = {:e}", g[j])))
        } else if cfg.g0 > 0.0 && !(g[j] < cfg.stability * gbar[j] && g[j] * cfg.stability > gbar[j]) {
            Some((ExitReason::Coupling, alloc::format!("g_{j}/gbar_{j} = {:e}", g[j] / gbar[j])))
        } else if dec.times[j] * libm::fabs(nu[j]) > cfg.stability * g[j] {
            Some((ExitReason::MassWindow, alloc::format!("t_{j}|nu_{j}| = {:e}", dec.times[j] * libm::fabs(nu[j]))))
        } else {
            None
        };
        if let Some((reason, detail)) = reason {
            exit = Some(DomainExit { j: j as u32, reason, detail });
            len = j;
            break;
        }
    }
    let bulk = (0..len)
        .map(|j| BulkCouplings { g: g[j], nu: nu[j], gbar: gbar[j] })
        .collect();
    Ok((bulk, betas, exit))
}

/// Iterate the bulk and observable flows from scale 0 to `J_max`.
pub fn run_flow(cfg: &FlowConfig, dec: &Decomposition) -> Result<FlowTrace> {
    if !(0.0..=0.2).contains(&cfg.g0) {
        return Err(invalid("g0 must lie in [0, 0.2]"));
    }
    if cfg.lambda_b0 != 0.0 && cfg.lambda_b0 != 1.0 {
        return Err(invalid("lambda_b0 must be 0 or 1"));
    }
    if cfg.j_max < 1 || cfg.j_max > dec.max_scale {
        return Err(invalid("J_max must lie in 1..=J of the decomposition"));
    }
    if dec.l != cfg.l || dec.m2 != cfg.m2 || dec.d != 4 {
        return Err(invalid("decomposition does not match (d = 4, L, m2)"));
    }
    if !(cfg.stability > 1.0) {
        return Err(invalid("stability constant must be > 1"));
    }
    let gamma = gamma_exponent(cfg.n, cfg.p, cfg.branch)?;
    let j_m = mass_scale(cfg.l, cfg.m2)?;
    let (pair, j_ab) = match &cfg.separation {
        Some(x) => {
            if x.len() != 4 {
                return Err(invalid("separation must have 4 coordinates"));
            }
            let r2: u128 = x.iter().map(|&c| (c as i128 * c as i128) as u128).sum();
            (Some(dec.pair_profile(x)?), Some(coalescence_scale(cfg.l, r2)?))
        }
        None => (None, None),
    };
    let (bulk, _betas, mut exit) = bulk_flow(cfg, dec)?;
    let pf = factorial(cfg.p);
    let mut obs = ObservableCouplings::initial(cfg.n, cfg.branch, cfg.lambda_b0)?;
    let mut records = Vec::with_capacity(bulk.len());
    let mut pi = 1.0;
    let mut gate_leak = 0.0;
    for (j, b) in bulk.iter().enumerate() {
        let j = j as u32;
        let mut rec = FlowRecord {
            j,
            g: b.g,
            nu: b.nu,
            gbar: b.gbar,
            chi: chi_factor(cfg.omega, j, j_m),
            lambda_a: obs.lambda_a,
            lambda_b: obs.lambda_b,
            q: obs.q_a,
            t_a: obs.t_a,
            t_b: obs.t_b,
            gamma_ratio: if cfg.g0 > 0.0 { libm::pow(b.g / cfg.g0, gamma) } else { 1.0 },
            pi,
            step: None,
        };
        if j < cfg.j_max && (j as usize) + 1 < bulk.len() {
            let inp = step_inputs(dec, cfg.n, cfg.p, j, *b, cfg.mode, pair.as_ref(), j_ab)?;
            let below = j_ab.is_none_or(|jab| j + 1 < jab);
            let f_of = |gm: f64| if below { 1.0 - cfg.p as f64 * inp.delta_nu_w1 - inp.beta * b.g * gm } else { 1.0 };
            let gp = gamma_exponent(cfg.n, cfg.p, Branch::Plus)?;
            let gm = if cfg.n == 1 { gp } else { gamma_exponent(cfg.n, cfg.p, Branch::Minus)? };
            let step = StepRecord {
                beta: inp.beta,
                delta_nu_w1: inp.delta_nu_w1,
                f_plus: f_of(gp),
                f_minus: f_of(gm),
                f: f_of(gamma),
            };
            rec.step = Some(step);
            records.push(rec);
            if !(step.f > 0.0) {
                exit = Some(DomainExit {
                    j,
                    reason: ExitReason::Eigenvalue,
                    detail: alloc::format!("f_{j} = {:e}", step.f),
                });
                break;
            }
            let (lam_a, lam_b) = (obs.lambda_a, obs.lambda_b);
            obs = observable_step(&obs, &inp, j, j_ab, cfg.n, cfg.p)?;
            if Some(j) == j_ab && j > 0 {
                let w = pair.as_ref().map_or(0.0, |pr| pr.w(j));
                gate_leak = pf * lam_a * lam_b * libm::pow(w, cfg.p as f64);
                obs.q_a += gate_leak;
                obs.q_b += gate_leak;
            }
            pi *= step.f;
        } else {
            records.push(rec);
        }
    }
    let pair_tail = pair.as_ref().map_or(0.0, |pr| pr.tail);
    Ok(FlowTrace {
        config: cfg.clone(),
        gamma,
        j_ab,
        j_m,
        records,
        gate_leak,
        pair_tail,
        exit,
    })
}
