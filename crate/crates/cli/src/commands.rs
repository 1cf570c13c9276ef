//! Subcommand implementations. Each writes its tables through the sink in
//! the configured format.
//!
//! Table columns (CSV header order):
//!
//! * `green`: x, class_size, norm, value, abs_err, scaled (`|x|^{d-2} G`)
//! * `bubble`: n, m2, log_inv_m2, value, tail_estimate, flagged;
//!   `bubble_slope`: n, slope, b, rel_dev
//! * `decompose`: j, time, c00, c1, w1, w2, dw2, beta_ratio
//! * `flow`: trace, j, g, nu, gbar, chi, lambda_a, lambda_b, q, t_a, t_b,
//!   gamma_ratio, pi, beta, delta_nu_w1, f_plus, f_minus, f;
//!   `flow_traces`: trace, b, j_ab, j_m, j_max, gamma, gate_leak, pair_tail,
//!   exit_j, exit_reason
//! * `predict`: see [`PredictRow`]
//! * `estimates` (`mc-wsaw`, `mc-phi4`): observable, mean, stderr, count, seed;
//!   `oracle`: observable, value, tail_bound, z_score
//! * `verify`: check, lhs, rhs, margin, pass

use std::f64::consts::PI;
use std::path::PathBuf;

use critlog_core::covariance::{beta_j, Decomposition};
use critlog_core::greens::{
    bubble, bubble_spatial, class_size, green_torus_exact, green_zd_fourier, green_zd_heat, symmetry_classes,
};
use critlog_core::lattice::{coalescence_scale, TorusLattice};
use critlog_core::models::phi4::PHI4_OBSERVABLES;
use critlog_core::models::tiny::required_n_max;
use critlog_core::models::{
    phi4_onesite_oracle, representation_check, wsaw_tiny_oracle, CheckLine, McEstimate, NetworkParams,
    OneSiteMoment, Phi4Params,
};
use critlog_core::rgflow::{
    gamma_exponent, predict_star_ratio, q_infinity, run_flow, Branch, FlowConfig, FlowMode, FlowTrace,
};
use critlog_core::special::factorial;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::cache::{bit_identical, load_or_build, CacheKey, CacheStatus};
use crate::config::*;
use crate::output::{coords, num, opt_num};
use crate::parallel;
use crate::{Ctx, Failure};

/// A row type with a fixed CSV column order.
pub trait CsvRow: Serialize {
    const HEADER: &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

fn emit<T: CsvRow>(ctx: &mut Ctx, table: &str, rows: &[T]) -> Result<(), Failure> {
    match ctx.format {
        Format::Csv => {
            let cells: Vec<Vec<String>> = rows.iter().map(CsvRow::cells).collect();
            ctx.sink.csv(table, T::HEADER, &cells)?
        }
        Format::Json => ctx.sink.json(table, &rows)?,
    }
    ctx.summary.push(format!("{table}: {} rows", rows.len()));
    Ok(())
}

pub fn execute(params: &Params, ctx: &mut Ctx) -> Result<(), Failure> {
    match params {
        Params::Green(p) => green(p, ctx),
        Params::Bubble(p) => bubble_cmd(p, ctx),
        Params::Decompose(p) => decompose_cmd(p, ctx),
        Params::Flow(p) => flow(p, ctx),
        Params::Predict(p) => predict(p, ctx),
        Params::McWsaw(p) => mc_wsaw(p, ctx),
        Params::McPhi4(p) => mc_phi4(p, ctx),
        Params::Verify(p) => verify(p, ctx),
    }
}

fn b_const(n: usize) -> f64 {
    (n as f64 + 8.0) / (16.0 * PI * PI)
}

// ---------------------------------------------------------------- green

#[derive(Debug, Clone, Serialize)]
pub struct GreenRow {
    pub x: Vec<i64>,
    pub class_size: u64,
    pub norm: f64,
    pub value: f64,
    pub abs_err: f64,
    pub scaled: f64,
}

impl CsvRow for GreenRow {
    const HEADER: &'static [&'static str] = &["x", "class_size", "norm", "value", "abs_err", "scaled"];
    fn cells(&self) -> Vec<String> {
        vec![
            coords(&self.x),
            self.class_size.to_string(),
            num(self.norm),
            num(self.value),
            num(self.abs_err),
            num(self.scaled),
        ]
    }
}

fn green_row(d: usize, x: Vec<i64>, class_size: u64, value: f64, abs_err: f64) -> GreenRow {
    let norm = x.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
    let scaled = if norm > 0.0 { norm.powi(d as i32 - 2) * value } else { 0.0 };
    GreenRow { x, class_size, norm, value, abs_err, scaled }
}

fn green(p: &GreenParams, ctx: &mut Ctx) -> Result<(), Failure> {
    let rows: Vec<GreenRow> = match p.route {
        GreenRoute::Torus => {
            let lat = TorusLattice::with_side(p.d, p.side)?;
            let table = green_torus_exact(&lat, p.m2)?;
            (0..lat.num_sites())
                .map(|b| {
                    let v = table.torus_entry(0, b).expect("torus table");
                    green_row(p.d, lat.displacement(0, b), 1, v, 0.0)
                })
                .collect()
        }
        GreenRoute::Heat | GreenRoute::Fourier => {
            let pts: Vec<(Vec<i64>, u64)> = match &p.points {
                Some(pts) => pts.iter().map(|x| (x.clone(), 1)).collect(),
                None => symmetry_classes(p.d, p.radius).into_iter().map(|x| {
                    let s = class_size(&x);
                    (x, s)
                }).collect(),
            };
            pts.into_par_iter()
                .map(|(x, s)| {
                    let g = match p.route {
                        GreenRoute::Heat => green_zd_heat(p.d, p.m2, &x)?,
                        _ => green_zd_fourier(p.d, p.m2, &x, p.resolution)?,
                    };
                    Ok(green_row(p.d, x, s, g.value, g.abs_err))
                })
                .collect::<critlog_core::Result<_>>()?
        }
    };
    emit(ctx, "green", &rows)
}

// ---------------------------------------------------------------- bubble

#[derive(Debug, Clone, Serialize)]
pub struct BubbleRow {
    pub n: usize,
    pub m2: f64,
    pub log_inv_m2: f64,
    pub value: f64,
    pub tail_estimate: f64,
    pub flagged: bool,
}

impl CsvRow for BubbleRow {
    const HEADER: &'static [&'static str] = &["n", "m2", "log_inv_m2", "value", "tail_estimate", "flagged"];
    fn cells(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            num(self.m2),
            num(self.log_inv_m2),
            num(self.value),
            num(self.tail_estimate),
            self.flagged.to_string(),
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeRow {
    pub n: usize,
    pub slope: f64,
    pub b: f64,
    pub rel_dev: f64,
}

impl CsvRow for SlopeRow {
    const HEADER: &'static [&'static str] = &["n", "slope", "b", "rel_dev"];
    fn cells(&self) -> Vec<String> {
        vec![self.n.to_string(), num(self.slope), num(self.b), num(self.rel_dev)]
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn bubble_cmd(p: &BubbleParams, ctx: &mut Ctx) -> Result<(), Failure> {
    let jobs: Vec<(usize, f64)> = p.n.iter().flat_map(|&n| p.m2.iter().map(move |&m| (n, m))).collect();
    let rows: Vec<BubbleRow> = jobs
        .into_par_iter()
        .map(|(n, m2)| {
            let r = match p.route {
                BubbleRoute::Time => bubble(n, m2)?,
                BubbleRoute::Spatial => bubble_spatial(n, m2, p.radius)?,
            };
            Ok(BubbleRow { n, m2, log_inv_m2: -m2.ln(), value: r.value, tail_estimate: r.tail_estimate, flagged: r.flagged })
        })
        .collect::<critlog_core::Result<_>>()?;
    let slopes: Vec<SlopeRow> = p
        .n
        .iter()
        .map(|&n| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r.n == n).map(|r| (r.log_inv_m2, r.value)).unzip();
            let slope = ls_slope(&xs, &ys);
            SlopeRow { n, slope, b: b_const(n), rel_dev: slope / b_const(n) - 1.0 }
        })
        .collect();
    emit(ctx, "bubble", &rows)?;
    emit(ctx, "bubble_slope", &slopes)?;
    for s in &slopes {
        ctx.summary.push(format!("n={}: slope {:.6} vs b {:.6} ({:+.2}%)", s.n, s.slope, s.b, 100.0 * s.rel_dev));
    }
    Ok(())
}

// ---------------------------------------------------------------- decompose

fn cache_dir(ctx: &Ctx, default_here: bool) -> Option<PathBuf> {
    ctx.cache_dir.clone().or_else(|| default_here.then(|| ctx.sink.dir().join("cache")))
}

fn load_decomposition(ctx: &mut Ctx, key: CacheKey, default_here: bool) -> Result<Decomposition, Failure> {
    let dir = cache_dir(ctx, default_here);
    let (dec, status) = load_or_build(dir.as_deref(), &key)?;
    if status != CacheStatus::Off {
        ctx.summary.push(format!("decomposition cache {}: {}", serde_json::to_string(&status).unwrap_or_default(), key.file_name()));
    }
    Ok(dec)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecomposeRow {
    pub j: u32,
    pub time: f64,
    pub c00: f64,
    pub c1: f64,
    pub w1: f64,
    pub w2: f64,
    pub dw2: Option<f64>,
    /// `β_j/(b log L)` at `n = 0` (d = 4 only).
    pub beta_ratio: Option<f64>,
}

impl CsvRow for DecomposeRow {
    const HEADER: &'static [&'static str] = &["j", "time", "c00", "c1", "w1", "w2", "dw2", "beta_ratio"];
    fn cells(&self) -> Vec<String> {
        vec![
            self.j.to_string(),
            num(self.time),
            num(self.c00),
            num(self.c1),
            num(self.w1),
            num(self.w2),
            opt_num(self.dw2),
            opt_num(self.beta_ratio),
        ]
    }
}

fn decompose_cmd(p: &DecomposeParams, ctx: &mut Ctx) -> Result<(), Failure> {
    let key = CacheKey::new(p.d, p.l, p.m2, p.scales, p.cutoff);
    let dir = cache_dir(ctx, true).expect("cache directory");
    let (dec, status) = load_or_build(Some(&dir), &key)?;
    let mut identical = None;
    if p.verify_cache && status == CacheStatus::Hit {
        identical = Some(bit_identical(&dec, &key.build()?));
    }
    let bl = b_const(0) * (p.l as f64).ln();
    let rows: Vec<DecomposeRow> = (0..=p.scales)
        .map(|j| {
            let i = j as usize;
            let beta_ratio = (p.d == 4 && j < p.scales).then(|| beta_j(&dec, 0, j).map(|b| b / bl)).transpose()?;
            Ok(DecomposeRow {
                j,
                time: dec.times[i],
                c00: dec.c00[i],
                c1: dec.c1[i],
                w1: dec.w1[i],
                w2: dec.w2[i],
                dw2: dec.dw2.get(i).copied(),
                beta_ratio,
            })
        })
        .collect::<critlog_core::Result<_>>()?;
    emit(ctx, "decompose", &rows)?;
    let file = dir.join(key.file_name());
    ctx.summary.push(format!("cache {}: {}", serde_json::to_string(&status).unwrap_or_default(), file.display()));
    ctx.summary.push(format!("G00 {:.12} tail beyond J {:.3e}", dec.g00, dec.tail00));
    ctx.details = Some(json!({
        "cache": status,
        "cache_file": key.file_name(),
        "g00": dec.g00,
        "tail00": dec.tail00,
        "range_warning": dec.range_warning,
        "bit_identical": identical,
    }));
    if identical == Some(false) {
        return Err(Failure::Verification("cached decomposition differs from recomputation".into(), ctx.details.clone()));
    }
    Ok(())
}

// ---------------------------------------------------------------- flow

#[derive(Debug, Clone, Serialize)]
pub struct FlowRow {
    pub trace: usize,
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
    pub gamma_ratio: f64,
    pub pi: f64,
    pub beta: Option<f64>,
    pub delta_nu_w1: Option<f64>,
    pub f_plus: Option<f64>,
    pub f_minus: Option<f64>,
    pub f: Option<f64>,
}

impl CsvRow for FlowRow {
    const HEADER: &'static [&'static str] = &[
        "trace", "j", "g", "nu", "gbar", "chi", "lambda_a", "lambda_b", "q", "t_a", "t_b", "gamma_ratio", "pi", "beta",
        "delta_nu_w1", "f_plus", "f_minus", "f",
    ];
    fn cells(&self) -> Vec<String> {
        vec![
            self.trace.to_string(),
            self.j.to_string(),
            num(self.g),
            num(self.nu),
            num(self.gbar),
            num(self.chi),
            num(self.lambda_a),
            num(self.lambda_b),
            num(self.q),
            num(self.t_a),
            num(self.t_b),
            num(self.gamma_ratio),
            num(self.pi),
            opt_num(self.beta),
            opt_num(self.delta_nu_w1),
            opt_num(self.f_plus),
            opt_num(self.f_minus),
            opt_num(self.f),
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub trace: usize,
    pub b: Option<Vec<i64>>,
    pub j_ab: Option<u32>,
    pub j_m: Option<i32>,
    pub j_max: u32,
    pub gamma: f64,
    pub gate_leak: f64,
    pub pair_tail: f64,
    pub exit_j: Option<u32>,
    pub exit_reason: Option<String>,
}

impl CsvRow for TraceRow {
    const HEADER: &'static [&'static str] =
        &["trace", "b", "j_ab", "j_m", "j_max", "gamma", "gate_leak", "pair_tail", "exit_j", "exit_reason"];
    fn cells(&self) -> Vec<String> {
        let opt = |x: Option<String>| x.unwrap_or_default();
        vec![
            self.trace.to_string(),
            self.b.as_deref().map(coords).unwrap_or_default(),
            opt(self.j_ab.map(|j| j.to_string())),
            opt(self.j_m.map(|j| j.to_string())),
            self.j_max.to_string(),
            num(self.gamma),
            num(self.gate_leak),
            num(self.pair_tail),
            opt(self.exit_j.map(|j| j.to_string())),
            opt(self.exit_reason.clone()),
        ]
    }
}

pub fn flow_rows(index: usize, tr: &FlowTrace) -> Vec<FlowRow> {
    tr.records
        .iter()
        .map(|r| FlowRow {
            trace: index,
            j: r.j,
            g: r.g,
            nu: r.nu,
            gbar: r.gbar,
            chi: r.chi,
            lambda_a: r.lambda_a,
            lambda_b: r.lambda_b,
            q: r.q,
            t_a: r.t_a,
            t_b: r.t_b,
            gamma_ratio: r.gamma_ratio,
            pi: r.pi,
            beta: r.step.map(|s| s.beta),
            delta_nu_w1: r.step.map(|s| s.delta_nu_w1),
            f_plus: r.step.map(|s| s.f_plus),
            f_minus: r.step.map(|s| s.f_minus),
            f: r.step.map(|s| s.f),
        })
        .collect()
}

fn dist2(x: &[i64]) -> u128 {
    x.iter().map(|&c| (c as i128 * c as i128) as u128).sum()
}

fn flow(p: &FlowParams, ctx: &mut Ctx) -> Result<(), Failure> {
    let ends: Vec<Option<Vec<i64>>> =
        if p.scan.is_empty() { vec![p.b.clone()] } else { p.scan.iter().cloned().map(Some).collect() };
    let mut cfgs = Vec::with_capacity(ends.len());
    for b in &ends {
        let sep: Option<Vec<i64>> = b.as_ref().map(|b| b.iter().zip(&p.a).map(|(x, y)| x - y).collect());
        let j_max = match (&sep, p.j_max) {
            (_, Some(j)) => j,
            (Some(s), None) => 2 * coalescence_scale(p.l, dist2(s))? + 30,
            (None, None) => 60,
        };
        cfgs.push(FlowConfig {
            n: p.n,
            p: p.p,
            l: p.l,
            m2: p.m2,
            g0: p.g0,
            branch: p.branch,
            lambda_b0: p.lambda_b0.unwrap_or(if sep.is_some() { 1.0 } else { 0.0 }),
            separation: sep,
            j_max,
            omega: p.omega,
            mode: p.mode,
            stability: p.stability,
        });
    }
    let scales = p.scales.unwrap_or_else(|| cfgs.iter().map(|c| c.j_max).max().unwrap_or(1));
    let dec = load_decomposition(ctx, CacheKey::new(4, p.l, p.m2, scales, p.cutoff), false)?;
    let traces: Vec<FlowTrace> = cfgs.par_iter().map(|c| run_flow(c, &dec)).collect::<critlog_core::Result<_>>()?;
    match ctx.format {
        Format::Csv => {
            let rows: Vec<FlowRow> = traces.iter().enumerate().flat_map(|(i, t)| flow_rows(i, t)).collect();
            emit(ctx, "flow", &rows)?;
            let summary: Vec<TraceRow> = traces
                .iter()
                .enumerate()
                .map(|(i, t)| TraceRow {
                    trace: i,
                    b: ends[i].clone(),
                    j_ab: t.j_ab,
                    j_m: t.j_m,
                    j_max: t.config.j_max,
                    gamma: t.gamma,
                    gate_leak: t.gate_leak,
                    pair_tail: t.pair_tail,
                    exit_j: t.exit.as_ref().map(|e| e.j),
                    exit_reason: t.exit.as_ref().map(|e| format!("{:?}: {}", e.reason, e.detail)),
                })
                .collect();
            emit(ctx, "flow_traces", &summary)?;
        }
        Format::Json => {
            ctx.sink.json("flow", &traces)?;
            ctx.summary.push(format!("flow: {} traces", traces.len()));
        }
    }
    for (i, t) in traces.iter().enumerate() {
        let last = t.last();
        ctx.summary.push(format!(
            "trace {i}: j_ab {}, J {}, lambda_a {:.9}, q {:.6e}, g_J {:.6e}",
            t.j_ab.map_or("none".to_string(), |j| j.to_string()),
            last.j, last.lambda_a, last.q, last.g
        ));
    }
    let exits: Vec<String> = traces
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.exit.as_ref().map(|e| format!("trace {i} left the domain at j = {} ({:?}): {}", e.j, e.reason, e.detail)))
        .collect();
    if exits.is_empty() {
        Ok(())
    } else {
        Err(Failure::Domain(exits.join("; ")))
    }
}

// ---------------------------------------------------------------- predict

/// Leading-order forms and flow-measured values for one `(n, p, ±)`.
#[derive(Debug, Clone, Serialize)]
pub struct PredictRow {
    pub n: usize,
    pub p: u32,
    pub branch: Branch,
    /// `γ^±_{n,p}`.
    pub gamma: f64,
    /// One-point normalisation `χ^{-p}S^{(p)} ~ A (log ε^{-1})^{-γ}`.
    pub star_log_power: f64,
    /// `A = p! (b g₀)^{-γ}`.
    pub star_amplitude: f64,
    /// Two-point `~ A' (log|a-b|)^{-2γ} |a-b|^{-2p}`.
    pub distance_power: u32,
    pub log_power: f64,
    /// `A' = p!/(2π)^{2p} (b g₀)^{-2γ}`.
    pub two_point_amplitude: f64,
    /// Equal-point leading factor: `W_aa ≈ p! G_aa^p`.
    pub equal_point_factor: f64,
    /// `p! λ_J` from the one-point flow.
    pub flow_star_ratio: f64,
    /// `λ_{j_ab}` from the two-point flow at the configured separation.
    pub flow_lambda_ab: f64,
    /// `q_∞ / (p! G_ab^p)` at that separation.
    pub flow_q_ratio: f64,
    /// `q_∞ / (p! G_aa^p)` at `a = b`.
    pub flow_equal_point: f64,
}

impl CsvRow for PredictRow {
    const HEADER: &'static [&'static str] = &[
        "n",
        "p",
        "branch",
        "gamma",
        "star_log_power",
        "star_amplitude",
        "distance_power",
        "log_power",
        "two_point_amplitude",
        "equal_point_factor",
        "flow_star_ratio",
        "flow_lambda_ab",
        "flow_q_ratio",
        "flow_equal_point",
    ];
    fn cells(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.p.to_string(),
            if self.branch == Branch::Plus { "+" } else { "-" }.to_string(),
            num(self.gamma),
            num(self.star_log_power),
            num(self.star_amplitude),
            self.distance_power.to_string(),
            num(self.log_power),
            num(self.two_point_amplitude),
            num(self.equal_point_factor),
            num(self.flow_star_ratio),
            num(self.flow_lambda_ab),
            num(self.flow_q_ratio),
            num(self.flow_equal_point),
        ]
    }
}

fn predict(p: &PredictParams, ctx: &mut Ctx) -> Result<(), Failure> {
    let sep = vec![p.separation, 0, 0, 0];
    let j_ab = coalescence_scale(p.l, dist2(&sep))?;
    let pair_scales = 2 * j_ab + 30;
    let scales = pair_scales.max(p.star_scales).max(30);
    let dec = load_decomposition(ctx, CacheKey::new(4, p.l, 0.0, scales, 0), false)?;
    let g_ab = green_zd_heat(4, 0.0, &sep)?.value;
    let g_aa = green_zd_heat(4, 0.0, &[0; 4])?.value;
    let mut jobs = Vec::new();
    for &n in &p.n {
        for &pp in &p.p {
            jobs.push((n, pp, Branch::Plus));
            if n >= 2 {
                jobs.push((n, pp, Branch::Minus));
            }
        }
    }
    let rows: Vec<PredictRow> = jobs
        .into_par_iter()
        .map(|(n, pp, branch)| {
            let gamma = gamma_exponent(n, pp, branch)?;
            let pf = factorial(pp);
            let bg = b_const(n) * p.g0;
            let mut star = FlowConfig::two_point(n, pp, p.l, p.g0, branch, vec![0; 4], p.star_scales);
            star.separation = None;
            star.lambda_b0 = 0.0;
            let star = predict_star_ratio(&run_flow(&star, &dec)?, None)?;
            let pair = run_flow(&FlowConfig::two_point(n, pp, p.l, p.g0, branch, sep.clone(), pair_scales), &dec)?;
            let lambda_ab = pair.record(j_ab).map_or(f64::NAN, |r| r.lambda_a);
            let q_ratio = q_infinity(&pair, g_ab)? / (pf * g_ab.powi(pp as i32));
            let mut equal = FlowConfig::two_point(n, pp, p.l, p.g0, branch, vec![0; 4], 30);
            equal.mode = FlowMode::Extended;
            let equal = q_infinity(&run_flow(&equal, &dec)?, g_aa)? / (pf * g_aa.powi(pp as i32));
            Ok(PredictRow {
                n,
                p: pp,
                branch,
                gamma,
                star_log_power: gamma,
                star_amplitude: pf * bg.powf(-gamma),
                distance_power: 2 * pp,
                log_power: 2.0 * gamma,
                two_point_amplitude: pf / (2.0 * PI).powi(2 * pp as i32) * bg.powf(-2.0 * gamma),
                equal_point_factor: pf,
                flow_star_ratio: star.ratio,
                flow_lambda_ab: lambda_ab,
                flow_q_ratio: q_ratio,
                flow_equal_point: equal,
            })
        })
        .collect::<critlog_core::Result<_>>()?;
    emit(ctx, "predict", &rows)?;
    for r in &rows {
        ctx.summary.push(format!(
            "n={} p={} {}: gamma {:.6}, two-point |a-b|^-{} (log|a-b|)^-{:.6}",
            r.n,
            r.p,
            if r.branch == Branch::Plus { "+" } else { "-" },
            r.gamma,
            r.distance_power,
            r.log_power
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------- Monte Carlo

#[derive(Debug, Clone, Serialize)]
pub struct EstimateRow {
    pub observable: String,
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
    pub seed: u64,
}

impl EstimateRow {
    pub fn new(name: &str, e: &McEstimate) -> Self {
        EstimateRow { observable: name.to_string(), mean: e.mean, stderr: e.stderr, count: e.count, seed: e.seed }
    }
}

impl CsvRow for EstimateRow {
    const HEADER: &'static [&'static str] = &["observable", "mean", "stderr", "count", "seed"];
    fn cells(&self) -> Vec<String> {
        vec![self.observable.clone(), num(self.mean), num(self.stderr), self.count.to_string(), self.seed.to_string()]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub observable: String,
    pub value: f64,
    pub tail_bound: f64,
    pub z_score: f64,
}

impl CsvRow for OracleRow {
    const HEADER: &'static [&'static str] = &["observable", "value", "tail_bound", "z_score"];
    fn cells(&self) -> Vec<String> {
        vec![self.observable.clone(), num(self.value), num(self.tail_bound), num(self.z_score)]
    }
}

fn mc_wsaw(p: &McWsawParams, ctx: &mut Ctx) -> Result<(), Failure> {
    let lat = TorusLattice::with_side(p.d, p.side)?;
    let params = NetworkParams { g: p.g, nu: p.nu, p: p.p };
    let est = parallel::network_mc(&lat, &params, p.a, p.b, p.samples, ctx.seed)?;
    ctx.seeds.push(ctx.seed);
    let name = if p.b.is_some() { "watermelon" } else { "star" };
    emit(ctx, "estimates", &[EstimateRow::new(name, &est)])?;
    ctx.summary.push(format!("{name}: {:.8} ± {:.2e} ({} samples)", est.mean, est.stderr, est.count));
    if est.flagged {
        ctx.summary.push("warning: nonconvergence heuristic tripped".into());
    }
    if p.oracle && lat.num_sites() <= 3 && p.nu > 0.0 {
        let n_max = required_n_max(p.d, p.nu, p.p, 1e-12);
        let o = wsaw_tiny_oracle(&lat, p.g, p.nu, p.a, p.b, p.p, n_max, 1e-12)?;
        let row = OracleRow { observable: name.into(), value: o.value, tail_bound: o.tail_bound, z_score: est.z_score(o.value) };
        ctx.summary.push(format!("oracle {:.8} (z = {:.2})", o.value, row.z_score));
        emit(ctx, "oracle", &[row])?;
    }
    Ok(())
}

fn mc_phi4(p: &McPhi4Params, ctx: &mut Ctx) -> Result<(), Failure> {
    let lat = TorusLattice::with_side(p.d, p.side)?;
    let params = Phi4Params { n: p.n, g: p.g, nu: p.nu };
    let bundle = parallel::phi4_mc(&lat, &params, p.a, p.b, p.sweeps, p.therm, ctx.seed)?;
    ctx.seeds.push(ctx.seed);
    let rows: Vec<EstimateRow> = bundle.estimates.iter().map(|(k, e)| EstimateRow::new(k, e)).collect();
    emit(ctx, "estimates", &rows)?;
    for r in &rows {
        ctx.summary.push(format!("{}: {:.6} ± {:.2e}", r.observable, r.mean, r.stderr));
    }
    ctx.details = Some(json!({ "acceptance": bundle.acceptance, "width": bundle.width }));
    Ok(())
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

impl From<CheckLine> for CheckRow {
    fn from(l: CheckLine) -> Self {
        CheckRow { check: l.name, lhs: l.lhs, rhs: l.rhs, margin: l.margin, pass: l.pass }
    }
}

impl CsvRow for CheckRow {
    const HEADER: &'static [&'static str] = &["check", "lhs", "rhs", "margin", "pass"];
    fn cells(&self) -> Vec<String> {
        vec![self.check.clone(), num(self.lhs), num(self.rhs), num(self.margin), self.pass.to_string()]
    }
}

fn check(name: String, lhs: f64, rhs: f64, allowed: f64) -> CheckRow {
    CheckLine::new(name, lhs, rhs, allowed).into()
}

type CheckFn<'a> = Box<dyn Fn() -> critlog_core::Result<Vec<CheckRow>> + Send + Sync + 'a>;

/// 3σ agreement with one rerun at four times the budget.
fn mc_check(name: String, target: f64, run: impl Fn(u64, u64) -> critlog_core::Result<McEstimate>, budget: u64, seed: u64) -> critlog_core::Result<CheckRow> {
    let mut est = run(budget, seed)?;
    if !est.within(target, 3.0) {
        est = run(4 * budget, seed ^ 0x5eed)?;
    }
    Ok(check(name, est.mean, target, 3.0 * est.stderr))
}

/// Seeds used by `verify` for a base seed.
pub fn verify_seeds(seed: u64) -> Vec<u64> {
    (0..6u64).map(|k| seed.wrapping_add(k)).collect()
}

fn verify(p: &VerifyParams, ctx: &mut Ctx) -> Result<(), Failure> {
    let seeds = verify_seeds(ctx.seed);
    let tol = p.tol;
    let checks: Vec<CheckFn> = vec![
        Box::new(move || {
            let mut rows = Vec::new();
            for side in [2usize, 3] {
                let lat = TorusLattice::with_side(1, side)?;
                for nu in [0.5, 1.0, 2.0] {
                    for pp in [1u32, 2] {
                        for l in representation_check(&lat, 0.0, nu, pp, tol, None)?.lines {
                            let mut r = CheckRow::from(l);
                            r.check = format!("representation g=0 side={side} nu={nu} p={pp}: {}", r.check);
                            rows.push(r);
                        }
                    }
                }
            }
            Ok(rows)
        }),
        Box::new(|| {
            let lat = TorusLattice::with_side(1, 2)?;
            let mut rows = Vec::new();
            for (k, g) in [0.01, 0.05].into_iter().enumerate() {
                let exact = wsaw_tiny_oracle(&lat, g, 1.0, 0, Some(1), 1, required_n_max(1, 1.0, 1, 1e-12), 1e-12)?.value;
                let params = NetworkParams { g, nu: 1.0, p: 1 };
                rows.push(mc_check(
                    format!("watermelon mc vs oracle g={g}"),
                    exact,
                    |n, s| parallel::network_mc(&lat, &params, 0, Some(1), n, s),
                    p.samples,
                    seeds[k],
                )?);
            }
            Ok(rows)
        }),
        Box::new(|| {
            let mut rows = Vec::new();
            for m2 in [0.0, 0.1] {
                for x in [[1i64, 0, 0, 0], [2, 1, 0, 0], [3, 2, 1, 0]] {
                    let h = green_zd_heat(4, m2, &x)?;
                    let f = green_zd_fourier(4, m2, &x, 3)?;
                    rows.push(check(format!("green heat vs fourier m2={m2} x=({})", coords(&x)), h.value, f.value, 1e-4 * h.value.abs()));
                }
            }
            let g = green_zd_heat(4, 0.0, &[16, 0, 0, 0])?.value;
            let target = 1.0 / (4.0 * PI * PI);
            rows.push(check("green |x|^2 G at |x|=16 vs 1/(4 pi^2)".into(), 256.0 * g, target, 0.02 * target));
            Ok(rows)
        }),
        Box::new(|| {
            let m2s = [1e-2, 1e-3, 1e-4];
            let xs: Vec<f64> = m2s.iter().map(|m: &f64| -m.ln()).collect();
            let mut rows = Vec::new();
            for n in [0usize, 1] {
                let ys = m2s.iter().map(|&m| bubble(n, m).map(|r| r.value)).collect::<critlog_core::Result<Vec<_>>>()?;
                rows.push(check(format!("bubble slope n={n} vs b"), ls_slope(&xs, &ys), b_const(n), 0.1 * b_const(n)));
            }
            Ok(rows)
        }),
        Box::new(|| {
            let dec = CacheKey::new(4, 2, 0.0, 16, 0).build()?;
            let bl = b_const(0) * 2f64.ln();
            let mut rows = Vec::new();
            for j in 8..=14 {
                rows.push(check(format!("beta_{j}/(b log 2)"), beta_j(&dec, 0, j)? / bl, 1.0, 0.1));
            }
            let flat = FlowConfig::two_point(1, 2, 2, 0.0, Branch::Plus, vec![8, 0, 0, 0], 16);
            let tr = run_flow(&flat, &dec)?;
            let dev = tr.records.iter().map(|r| (r.lambda_a - 1.0).abs()).fold(0.0, f64::max);
            rows.push(check("flow g0=0: max |lambda - 1|".into(), dev, 0.0, 0.0));
            rows.push(check("gamma+(n=1,p=2) vs 1/3".into(), gamma_exponent(1, 2, Branch::Plus)?, 1.0 / 3.0, 1e-15));
            Ok(rows)
        }),
        Box::new(|| {
            let one = TorusLattice::with_side(1, 1)?;
            let params = Phi4Params { n: 2, g: 1.0, nu: 1.0 };
            let mut rows = Vec::new();
            for (k, (obs, m)) in [("phi_a.phi_a", OneSiteMoment::PhiSq), ("same_sq_cov", OneSiteMoment::SameCov), ("cross_sq_cov", OneSiteMoment::CrossCov)]
                .into_iter()
                .enumerate()
            {
                let target = phi4_onesite_oracle(2, 1.0, 1.0, m)?;
                rows.push(mc_check(
                    format!("phi4 one-site n=2 g=1 nu=1 {obs}"),
                    target,
                    |n, s| Ok(parallel::phi4_mc(&one, &params, 0, 0, n, 2000, s)?.get(obs).expect("observable").clone()),
                    p.sweeps,
                    seeds[2 + k],
                )?);
            }
            let cross = parallel::phi4_mc(&one, &params, 0, 0, p.sweeps, 2000, seeds[4])?;
            let c = cross.get("cross_sq_cov").expect("observable");
            let upper = c.mean + 3.0 * c.stderr;
            rows.push(CheckRow { check: "phi4 one-site cross covariance < 0 (mean + 3 stderr)".into(), lhs: upper, rhs: 0.0, margin: upper.max(0.0), pass: upper < 0.0 });
            let two = TorusLattice::with_side(1, 2)?;
            let gauss = Phi4Params { n: 1, g: 0.0, nu: 1.0 };
            let g01 = green_torus_exact(&two, 1.0)?.torus_entry(0, 1).expect("torus table");
            rows.push(mc_check(
                "phi4 two-site gaussian <phi_0 phi_1> vs G_01".into(),
                g01,
                |n, s| Ok(parallel::phi4_mc(&two, &gauss, 0, 1, n, 2000, s)?.get(PHI4_OBSERVABLES[0]).expect("observable").clone()),
                p.sweeps,
                seeds[5],
            )?);
            Ok(rows)
        }),
    ];
    let rows: Vec<CheckRow> = checks
        .par_iter()
        .map(|c| c())
        .collect::<critlog_core::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    ctx.seeds = seeds.clone();
    emit(ctx, "verify", &rows)?;
    let failed: Vec<&CheckRow> = rows.iter().filter(|r| !r.pass).collect();
    ctx.summary.push(format!("{}/{} checks pass", rows.len() - failed.len(), rows.len()));
    for r in &failed {
        ctx.summary.push(format!("FAIL {}: {} vs {} (margin {:.3})", r.check, r.lhs, r.rhs, r.margin));
    }
    if failed.is_empty() {
        Ok(())
    } else {
        let names: Vec<&str> = failed.iter().map(|r| r.check.as_str()).collect();
        Err(Failure::Verification(format!("{} checks failed", failed.len()), Some(json!({ "failed": names }))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let xs = [1.0, 2.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        assert!((ls_slope(&xs, &ys) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn headers_match_cells() {
        let g = green_row(4, vec![2, 0, 0, 0], 8, 0.1, 0.0);
        assert_eq!(g.cells().len(), GreenRow::HEADER.len());
        assert_eq!(g.scaled, 0.4);
        let e = EstimateRow { observable: "x".into(), mean: 1.0, stderr: 0.1, count: 3, seed: 9 };
        assert_eq!(e.cells(), ["x", "1.0", "0.1", "3", "9"]);
    }
}
