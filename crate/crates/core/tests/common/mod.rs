//! Property suites shared by the `invariants` and `acceptance` targets.
#![allow(dead_code)]

use std::fmt::Debug;
use std::sync::OnceLock;

use critlog_core::covariance::{decompose, Decomposition};
use critlog_core::greens::{bubble, green_torus_exact, green_zd_fourier, neumann_green, GreenTable};
use critlog_core::lattice::{coalescence_scale, mass_scale, TorusLattice};
use critlog_core::models::mc::{chain_rng, McEstimate, Tally};
use critlog_core::models::{
    intersection_local_time, phi4_mc, simulate_walk, watermelon_mc, Phi4Params, SpinConfig,
};
use critlog_core::rgflow::{
    eigen_f, observable_step, run_flow, Branch, FlowConfig, FlowMode, M2Matrix,
    ObservableCouplings, StepInputs,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub struct Suite {
    pub module: &'static str,
    pub name: &'static str,
    pub run: fn(u32) -> Result<(), String>,
}

fn runner(name: &str, cases: u32) -> TestRunner {
    let mut seed = [0x5au8; 32];
    for (i, b) in name.bytes().enumerate() {
        seed[i % 32] = seed[i % 32].rotate_left(3) ^ b;
    }
    let cfg = Config { cases, failure_persistence: None, max_shrink_iters: 64, ..Config::default() };
    TestRunner::new_with_rng(cfg, TestRng::from_seed(RngAlgorithm::ChaCha, &seed))
}

fn check<S>(name: &str, cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S: Strategy,
    S::Value: Debug,
{
    runner(name, cases).run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

/// Torus with at most `max_sites` sites, `d ∈ 1..=3`.
fn torus(max_sites: usize) -> impl Strategy<Value = (usize, usize)> {
    (1usize..=3, 1usize..=max_sites).prop_map(move |(d, s)| {
        let mut side = 1;
        while (side + 1usize).pow(d as u32) <= max_sites && side < s {
            side += 1;
        }
        (d, side.max(1))
    })
}

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

fn dec_massless() -> &'static Decomposition {
    static DEC: OnceLock<Decomposition> = OnceLock::new();
    DEC.get_or_init(|| decompose(4, 2, 0.0, 120, 0).expect("decomposition"))
}

fn torus_matrix(lat: &TorusLattice, m2: f64) -> DMatrix<f64> {
    match green_torus_exact(lat, m2).expect("dense green") {
        GreenTable::Torus { matrix, .. } => matrix,
        _ => unreachable!(),
    }
}

// ---------------------------------------------------------------- lattice

fn laplacian_spectrum(cases: u32) -> Result<(), String> {
    check("laplacian", cases, torus(256), |(d, side)| {
        let lat = TorusLattice::with_side(d, side).map_err(|e| fail(e.to_string()))?;
        let lap = lat.laplacian_matrix();
        let m = lat.num_sites();
        for i in 0..m {
            let row: f64 = (0..m).map(|j| lap[(i, j)]).sum();
            prop_assert_eq!(row, 0.0);
            for j in 0..m {
                prop_assert_eq!(lap[(i, j)], lap[(j, i)]);
            }
        }
        let eig = lap.symmetric_eigen();
        let top = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(top <= 1e-10 * (4 * d) as f64, "largest eigenvalue {top}");
        Ok(())
    })
}

fn coalescence_monotone(cases: u32) -> Result<(), String> {
    check("coalescence", cases, (2u64..=6, 1u128..=1_000_000_000_000, 0u128..=1000), |(l, r2, extra)| {
        let j = coalescence_scale(l, r2).unwrap();
        let j2 = coalescence_scale(l, r2 + extra).unwrap();
        prop_assert!(j2 >= j);
        let scaled = coalescence_scale(l, r2 * (l as u128) * (l as u128)).unwrap();
        prop_assert_eq!(scaled, j + 1);
        Ok(())
    })
}

fn mass_scale_bracket(cases: u32) -> Result<(), String> {
    check("mass_scale", cases, (2u64..=6, log_uniform(1e-12, 10.0), 1.0f64..100.0), |(l, m2, f)| {
        let j = mass_scale(l, m2).unwrap().unwrap();
        let jf = mass_scale(l, m2 * f).unwrap().unwrap();
        prop_assert!(jf <= j);
        let m = m2.sqrt();
        prop_assert!(m * (l as f64).powi(j) <= 1.0);
        prop_assert!(m * (l as f64).powi(j + 1) > 1.0);
        Ok(())
    })
}

// ----------------------------------------------------------------- greens

fn neumann_matches_dense(cases: u32) -> Result<(), String> {
    let s = (torus(256), prop::sample::select(vec![0.1, 1.0, 10.0]));
    check("neumann", cases, s, |((d, side), m2)| {
        let lat = TorusLattice::with_side(d, side).unwrap();
        let exact = torus_matrix(&lat, m2);
        let tol = 1e-9;
        let v = vec![Complex64::new(m2, 0.0); lat.num_sites()];
        let nr = neumann_green(&lat, &v, 1 << 24, tol).map_err(|e| fail(e.to_string()))?;
        let diff = exact
            .iter()
            .zip(nr.matrix.iter())
            .map(|(a, b)| (a - b.re).abs().max(b.im.abs()))
            .fold(0.0, f64::max);
        prop_assert!(diff <= tol + 1e-12, "diff {diff}");
        Ok(())
    })
}

fn green_mass_monotone(cases: u32) -> Result<(), String> {
    check("green_monotone", cases, (torus(64), log_uniform(1e-3, 10.0), 1.0f64..10.0), |((d, side), m1, f)| {
        let lat = TorusLattice::with_side(d, side).unwrap();
        let g1 = torus_matrix(&lat, m1);
        let g2 = torus_matrix(&lat, m1 * f);
        for (a, b) in g1.iter().zip(g2.iter()) {
            prop_assert!(*a >= *b - 1e-12 * a.abs(), "{a} < {b}");
        }
        Ok(())
    })
}

fn fourier_monotone(cases: u32) -> Result<(), String> {
    check("fourier_monotone", cases, (log_uniform(1e-3, 10.0), 1.0f64..10.0), |(m1, f)| {
        let at = |d: usize, m2: f64| green_zd_fourier(d, m2, &vec![0; d], 2).unwrap();
        let (a3, b3, a4, b4) = (at(3, m1), at(3, m1 * f), at(4, m1), at(4, m1 * f));
        prop_assert!(a4.value >= b4.value - a4.abs_err - b4.abs_err, "m2 order d=4");
        prop_assert!(a3.value >= b3.value - a3.abs_err - b3.abs_err, "m2 order d=3");
        prop_assert!(a3.value >= a4.value - a3.abs_err - a4.abs_err, "d order");
        Ok(())
    })
}

fn bubble_prefactor(cases: u32) -> Result<(), String> {
    check("bubble_prefactor", cases, (0usize..=12, log_uniform(1e-4, 1.0)), |(n, m2)| {
        let b0 = bubble(0, m2).unwrap().value;
        let bn = bubble(n, m2).unwrap().value;
        let want = (n as f64 + 8.0) / 8.0 * b0;
        prop_assert!((bn - want).abs() <= 4.0 * f64::EPSILON * want, "{bn} vs {want}");
        Ok(())
    })
}

// ------------------------------------------------------------- covariance

fn decomposition_strategy() -> impl Strategy<Value = (usize, u64, f64, u32)> {
    (
        3usize..=4,
        2u64..=4,
        prop_oneof![Just(0.0), log_uniform(1e-4, 1.0)],
        1u32..=16,
    )
}

fn moments_telescope(cases: u32) -> Result<(), String> {
    check("telescope", cases, decomposition_strategy(), |(d, l, m2, j)| {
        let dec = decompose(d, l, m2, j, 0).unwrap();
        let mut acc = 0.0;
        for k in 0..j as usize {
            acc += dec.dw2[k];
            prop_assert_eq!(dec.w1[k + 1], dec.w1[k] + dec.c1[k + 1]);
        }
        prop_assert_eq!(acc, dec.w2[j as usize]);
        Ok(())
    })
}

fn beta_sum_is_bubble(cases: u32) -> Result<(), String> {
    check("beta_sum", cases, (0usize..=4, log_uniform(1e-3, 1.0)), |(n, m2)| {
        let j = ((40.0 / m2).log2().ceil() as u32) + 2;
        let dec = decompose(4, 2, m2, j, 0).unwrap();
        let sum: f64 = (0..j)
            .map(|k| critlog_core::covariance::beta_j(&dec, n, k).unwrap())
            .sum::<f64>()
            / (n as f64 + 8.0);
        let bub = bubble(n, m2).unwrap().value / (n as f64 + 8.0);
        prop_assert!((sum / bub - 1.0).abs() < 1e-9, "{sum} vs {bub}");
        Ok(())
    })
}

fn symbol_nonnegative(cases: u32) -> Result<(), String> {
    check("symbol", cases, (prop_oneof![Just(0.0), log_uniform(1e-4, 1.0)], 1u32..=30), |(m2, j)| {
        let dec = decompose(4, 2, m2, j, 0).unwrap();
        let grid = [0.0, 0.5 * std::f64::consts::PI, std::f64::consts::PI, 1.5 * std::f64::consts::PI];
        for idx in 0..256usize {
            let k: Vec<f64> = (0..4).map(|i| grid[(idx >> (2 * i)) & 3]).collect();
            for s in 1..=j {
                let v = dec.slab_symbol(s, &k);
                prop_assert!(v >= 0.0, "symbol {v} at j={s}, k={k:?}");
            }
        }
        Ok(())
    })
}

// ----------------------------------------------------------------- rgflow

fn branch_vector(n: usize, branch: Branch) -> Vec<f64> {
    ObservableCouplings::initial(n, branch, 1.0).unwrap().h
}

fn eigenvector_preserved(cases: u32) -> Result<(), String> {
    let s = (
        2usize..=6,
        1u32..=2,
        any::<bool>(),
        0.0f64..0.2,
        -0.05f64..0.05,
        0.0f64..1.0,
        0u32..20,
        prop_oneof![Just(None), (0u32..20).prop_map(Some)],
        0.1f64..3.0,
    );
    check("eigenvector", cases, s, |(n, p, plus, g, delta, beta, j, j_ab, lam)| {
        let branch = if plus { Branch::Plus } else { Branch::Minus };
        let mut obs = ObservableCouplings::initial(n, branch, 1.0).unwrap();
        obs.lambda_a = lam;
        obs.lambda_b = 2.0 * lam;
        let inp = StepInputs {
            g,
            nu: 0.0,
            nu_plus: 0.0,
            beta,
            c00: 0.01,
            w1: 1.0,
            w2: 0.1,
            delta_w2: 0.01,
            delta_nu_w1: delta,
            delta_nu_w2: 0.0,
            delta_wp_ab: 0.0,
        };
        let next = observable_step(&obs, &inp, j, j_ab, n, p).unwrap();
        let below = j_ab.is_none_or(|jab| j + 1 < jab);
        let f = eigen_f(n, p, branch, g, delta, beta, below).unwrap();
        for (a, b) in next.h.iter().zip(&obs.h) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        prop_assert!((next.lambda_a / lam - f).abs() <= 1e-12);
        prop_assert!((next.lambda_b / (2.0 * lam) - f).abs() <= 1e-12);
        Ok(())
    })
}

fn m2_matrix_eigen(cases: u32) -> Result<(), String> {
    check("m2_matrix", cases, (2usize..=8, -2.0f64..2.0, -2.0f64..2.0), |(n, r, s)| {
        let a = M2Matrix { n, r, s };
        let plus = a.apply(&vec![1.0; n]);
        let mut e = vec![0.0; n];
        e[0] = 1.0;
        e[1] = -1.0;
        let minus = a.apply(&e);
        for i in 0..n {
            prop_assert!((plus[i] - a.eigen_plus()).abs() <= 1e-12);
            prop_assert!((minus[i] - a.eigen_minus() * e[i]).abs() <= 1e-12);
        }
        Ok(())
    })
}

fn flow_case() -> impl Strategy<Value = (usize, u32, bool, f64, Vec<i64>, bool)> {
    (0usize..=3, 1u32..=3, any::<bool>(), 0.001f64..0.2, prop::collection::vec(0i64..40_000, 4), any::<bool>())
        .prop_map(|(n, p, plus, g0, x, ext)| {
            let p = if n == 0 { p } else { p.min(2) };
            let plus = plus || n == 1;
            (n, p, plus, g0, x, ext)
        })
}

fn flow_config(n: usize, p: u32, plus: bool, g0: f64, x: Vec<i64>, ext: bool, j_max: u32) -> FlowConfig {
    let branch = if plus { Branch::Plus } else { Branch::Minus };
    let mut cfg = FlowConfig::two_point(n, p, 2, g0, branch, x, j_max);
    cfg.mode = if ext { FlowMode::Extended } else { FlowMode::Default };
    cfg
}

fn coalescence_gating(cases: u32) -> Result<(), String> {
    check("gating", cases, flow_case(), |(n, p, plus, g0, x, ext)| {
        let tr = run_flow(&flow_config(n, p, plus, g0, x, ext, 50), dec_massless()).unwrap();
        let j_ab = tr.j_ab.unwrap();
        let mut product = 1.0;
        for rec in &tr.records {
            if rec.j <= j_ab {
                prop_assert_eq!(rec.q, 0.0, "q at j={} (j_ab={})", rec.j, j_ab);
            } else if let Some(at) = tr.record(j_ab) {
                prop_assert_eq!(rec.lambda_a, at.lambda_a);
                prop_assert_eq!(rec.lambda_b, at.lambda_b);
            }
            prop_assert!((rec.pi / product - 1.0).abs() <= 1e-12, "pi identity at j={}", rec.j);
            if let Some(step) = rec.step {
                product *= step.f;
            }
            if p == 1 {
                prop_assert_eq!(rec.gamma_ratio, 1.0);
            }
        }
        Ok(())
    })
}

fn pi_gamma_comparable(cases: u32) -> Result<(), String> {
    check("pi_gamma", cases, (0usize..=4, 1u32..=2, any::<bool>(), 0.001f64..0.05), |(n, p, plus, g0)| {
        let branch = if plus || n == 1 { Branch::Plus } else { Branch::Minus };
        let mut cfg = FlowConfig::two_point(n, p, 2, g0, branch, vec![0; 4], 120);
        cfg.separation = None;
        cfg.lambda_b0 = 0.0;
        let tr = run_flow(&cfg, dec_massless()).unwrap();
        let alpha = |j: u32| {
            let r = tr.record(j).unwrap();
            r.pi / r.gamma_ratio
        };
        let (a60, a120) = (alpha(60), alpha(120));
        prop_assert!((a120 - 1.0).abs() <= g0, "alpha - 1 = {}", a120 - 1.0);
        prop_assert!((a120 - a60).abs() <= 0.01 * g0, "alpha drift {}", a120 - a60);
        Ok(())
    })
}

fn gbar_monotone(cases: u32) -> Result<(), String> {
    check("gbar", cases, (0usize..=3, 0.001f64..0.2, prop_oneof![Just(0.0), log_uniform(1e-4, 0.1)]), |(n, g0, m2)| {
        let dec = decompose(4, 2, m2, 40, 0).unwrap();
        let mut cfg = FlowConfig::two_point(n, 1, 2, g0, Branch::Plus, vec![0; 4], 40);
        cfg.m2 = m2;
        cfg.separation = None;
        cfg.lambda_b0 = 0.0;
        let tr = run_flow(&cfg, &dec).unwrap();
        for w in tr.records.windows(2) {
            let beta = w[0].step.unwrap().beta;
            if beta > 0.0 {
                prop_assert!(w[1].gbar <= w[0].gbar);
            }
        }
        if let Some(jm) = tr.j_m {
            let stall = (2 * jm + 8) as u32;
            let (a, b) = (tr.record(stall).unwrap().gbar, tr.last().gbar);
            prop_assert!((a - b).abs() <= 1e-6 * b, "gbar still moving: {a} -> {b}");
        }
        Ok(())
    })
}

fn stability_flagged(cases: u32) -> Result<(), String> {
    check("stability", cases, (flow_case(), 1.0001f64..3.0), |((n, p, plus, g0, x, _), cd)| {
        let mut cfg = flow_config(n, p, plus, g0, x, true, 50);
        cfg.stability = cd;
        let tr = run_flow(&cfg, dec_massless()).unwrap();
        let dec = dec_massless();
        for rec in &tr.records {
            let t = dec.times[rec.j as usize];
            prop_assert!(rec.g > 0.0 && rec.g < cd * rec.gbar && rec.g * cd > rec.gbar);
            prop_assert!(t * rec.nu.abs() <= cd * rec.g, "window left at j={} unflagged", rec.j);
        }
        match &tr.exit {
            Some(e) => prop_assert!(tr.records.len() as u32 <= e.j + 1),
            None => prop_assert_eq!(tr.records.len(), 51),
        }
        Ok(())
    })
}

// ----------------------------------------------------------------- models

fn walk_paths(cases: u32) -> Result<(), String> {
    check("walk_path", cases, (torus(64), 0.0f64..20.0, any::<u64>()), |((d, side), t, seed)| {
        let lat = TorusLattice::with_side(d, side).unwrap();
        let mut rng = chain_rng(seed, 0);
        let path = simulate_walk(&lat, 0, t, &mut rng);
        let total: f64 = path.local_times(lat.num_sites()).iter().sum();
        prop_assert!((total - t).abs() <= 1e-12 * t.max(1.0));
        prop_assert!(path.is_nearest_neighbour_path(&lat));
        Ok(())
    })
}

fn superadditivity(cases: u32) -> Result<(), String> {
    let s = (torus(27), prop::collection::vec(0.0f64..10.0, 2..=4), any::<u64>());
    check("superadditivity", cases, s, |((d, side), times, seed)| {
        let lat = TorusLattice::with_side(d, side).unwrap();
        let m = lat.num_sites();
        let mut rng = chain_rng(seed, 1);
        let paths: Vec<_> = times.iter().map(|&t| simulate_walk(&lat, 0, t, &mut rng)).collect();
        let joint = intersection_local_time(m, &paths);
        let single: f64 = paths.iter().map(|p| intersection_local_time(m, std::slice::from_ref(p))).sum();
        // Equal in exact arithmetic for disjoint supports; allow summation-order rounding.
        prop_assert!(joint >= single * (1.0 - 1e-12), "{joint} < {single}");
        Ok(())
    })
}

fn spin_energy_finite(cases: u32) -> Result<(), String> {
    let s = (torus(27), 1usize..=3, 0.0f64..2.0, -1.0f64..2.0, prop::collection::vec(-50.0f64..50.0, 81));
    check("spin_energy", cases, s, |((d, side), n, g, nu, vals)| {
        let lat = TorusLattice::with_side(d, side).unwrap();
        let m = lat.num_sites();
        let cfg = SpinConfig { n, values: vals[..m * n].to_vec() };
        let e = cfg.energy(&lat, &Phi4Params { n, g, nu });
        prop_assert!(e.is_finite());
        Ok(())
    })
}

fn estimator_batches(cases: u32) -> Result<(), String> {
    let s = (prop::collection::vec((-5.0f64..5.0, 1u64..100), 16..64), any::<u64>());
    check("mc_estimate", cases, s, |(chunks, seed)| {
        let tallies: Vec<Tally> = chunks
            .iter()
            .map(|&(x, c)| {
                let mut t = Tally::default();
                for k in 0..c {
                    t.push(x + (k % 3) as f64);
                }
                t
            })
            .collect();
        let est = McEstimate::from_tallies(&tallies, seed).unwrap();
        prop_assert!(est.stderr >= 0.0);
        prop_assert!(est.batches.len() >= 16);
        Ok(())
    })
}

/// `|x - y| ≤ 3σ`, rerunning once at 4× budget.
fn agree3<F: Fn(u64, u64) -> (f64, f64, f64)>(base: u64, seed: u64, f: F) -> Result<(), TestCaseError> {
    let (x, y, s) = f(base, seed);
    if (x - y).abs() <= 3.0 * s {
        return Ok(());
    }
    let (x, y, s) = f(4 * base, seed ^ 0x9e37_79b9);
    prop_assert!((x - y).abs() <= 3.0 * s, "{x} vs {y} (sigma {s})");
    Ok(())
}

fn watermelon_reversible(cases: u32) -> Result<(), String> {
    let s = (torus(9), 0.0f64..0.1, 0.5f64..2.0, 1u32..=2, any::<u64>(), any::<prop::sample::Index>());
    check("watermelon_symmetry", cases, s, |((d, side), g, nu, p, seed, idx)| {
        let lat = TorusLattice::with_side(d, side).unwrap();
        let b = idx.index(lat.num_sites());
        agree3(4096, seed, |n, s| {
            let x = watermelon_mc(&lat, g, nu, 0, b, p, n, s).unwrap();
            let y = watermelon_mc(&lat, g, nu, b, 0, p, n, s.wrapping_add(1)).unwrap();
            (x.mean, y.mean, (x.stderr.powi(2) + y.stderr.powi(2)).sqrt())
        })
    })
}

fn phi4_symmetries(cases: u32) -> Result<(), String> {
    let s = (torus(8), 2usize..=3, 0.1f64..1.0, 0.5f64..2.0, any::<u64>(), any::<prop::sample::Index>());
    check("phi4_symmetry", cases, s, |((d, side), n, g, nu, seed, idx)| {
        let lat = TorusLattice::with_side(d, side).unwrap();
        let b = idx.index(lat.num_sites());
        let params = Phi4Params { n, g, nu };
        let run = |sw: u64, s: u64| phi4_mc(&lat, &params, 0, b, sw, 100, s).unwrap();
        agree3(2048, seed, |sw, s| {
            let e = run(sw, s);
            let odd = e.get("phi1_a*phi2_b").unwrap();
            (odd.mean, 0.0, odd.stderr)
        })?;
        agree3(2048, seed, |sw, s| {
            let e = run(sw, s);
            let (one, dot) = (e.get("phi1_a*phi1_b").unwrap(), e.get("phi_a.phi_b").unwrap());
            (n as f64 * one.mean, dot.mean, n as f64 * one.stderr + dot.stderr)
        })
    })
}

pub fn suites() -> Vec<Suite> {
    vec![
        Suite { module: "lattice", name: "laplacian symmetric, zero row sums, negative semidefinite", run: laplacian_spectrum },
        Suite { module: "lattice", name: "coalescence scale monotone, +1 under scaling by L", run: coalescence_monotone },
        Suite { module: "lattice", name: "mass scale monotone and bracketed", run: mass_scale_bracket },
        Suite { module: "greens", name: "Neumann series equals dense inverse", run: neumann_matches_dense },
        Suite { module: "greens", name: "torus Green entrywise decreasing in m2", run: green_mass_monotone },
        Suite { module: "greens", name: "Fourier G_00 decreasing in m2 and d", run: fourier_monotone },
        Suite { module: "greens", name: "bubble n-dependence is the (n+8)/8 prefactor", run: bubble_prefactor },
        Suite { module: "covariance", name: "w2 telescopes and w1 adds exactly", run: moments_telescope },
        Suite { module: "covariance", name: "sum of beta_j/(n+8) equals bubble/(n+8)", run: beta_sum_is_bubble },
        Suite { module: "covariance", name: "slab symbols nonnegative on 4^4 grid", run: symbol_nonnegative },
        Suite { module: "rgflow", name: "eigenvectors preserved, lambda ratio equals f", run: eigenvector_preserved },
        Suite { module: "rgflow", name: "M2 matrix eigenvalues", run: m2_matrix_eigen },
        Suite { module: "rgflow", name: "coalescence gating, Pi identity, p=1 Gamma", run: coalescence_gating },
        Suite { module: "rgflow", name: "Pi/Gamma ratio stabilises near 1", run: pi_gamma_comparable },
        Suite { module: "rgflow", name: "gbar decreasing, stalls above mass scale", run: gbar_monotone },
        Suite { module: "rgflow", name: "stability-window exits are flagged", run: stability_flagged },
        Suite { module: "models", name: "walk local times sum to T, nearest-neighbour steps", run: walk_paths },
        Suite { module: "models", name: "intersection local time superadditive", run: superadditivity },
        Suite { module: "models", name: "spin energy finite", run: spin_energy_finite },
        Suite { module: "models", name: "batch-means estimates", run: estimator_batches },
        Suite { module: "models", name: "watermelon estimate symmetric in (a, b)", run: watermelon_reversible },
        Suite { module: "models", name: "phi4 flip symmetry and O(n) trace identity", run: phi4_symmetries },
    ]
}
