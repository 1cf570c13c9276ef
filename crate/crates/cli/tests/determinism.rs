mod common;

use std::fs;
use std::path::Path;

use common::run;
use critlog::parallel;
use critlog_core::lattice::TorusLattice;
use critlog_core::models::{phi4_mc, star_mc, watermelon_mc, NetworkParams, Phi4Params};

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    assert!(!files.is_empty());
    files
}

fn same_bytes_across_threads(cmd: &str, cfg: &str) {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "3", "1"].iter().enumerate() {
        let r = run(cmd, Some(cfg), &dir.path().join(format!("r{i}")), &["--threads", threads, "--seed", "77"]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        outputs.push(csv_files(&r.out));
    }
    assert_eq!(outputs[0], outputs[1], "{cmd}: thread count changed the output");
    assert_eq!(outputs[0], outputs[2], "{cmd}: rerun changed the output");
}

#[test]
fn mc_wsaw_is_byte_identical() {
    same_bytes_across_threads("mc-wsaw", r#"{"mc-wsaw": {"g": 0.05, "p": 2, "samples": 20000}}"#);
}

#[test]
fn mc_phi4_is_byte_identical() {
    same_bytes_across_threads("mc-phi4", r#"{"mc-phi4": {"sweeps": 6400, "therm": 100}}"#);
}

#[test]
fn flow_scan_is_byte_identical() {
    same_bytes_across_threads("flow", r#"{"flow": {"scan": [[3,0,0,0],[50,7,0,1],[999,0,0,0]], "mode": "extended"}}"#);
}

#[test]
fn verify_is_byte_identical() {
    same_bytes_across_threads("verify", r#"{"verify": {"samples": 6400, "sweeps": 6400}}"#);
}

#[test]
fn seeds_change_monte_carlo_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"mc-wsaw": {"samples": 6400}}"#;
    let a = run("mc-wsaw", Some(cfg), &dir.path().join("a"), &["--seed", "1"]);
    let b = run("mc-wsaw", Some(cfg), &dir.path().join("b"), &["--seed", "2"]);
    assert_ne!(csv_files(&a.out), csv_files(&b.out));
}

#[test]
fn parallel_drivers_equal_the_sequential_core() {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let lat = TorusLattice::with_side(1, 3).unwrap();
    let params = NetworkParams { g: 0.1, nu: 0.5, p: 2 };
    pool.install(|| {
        let par = parallel::network_mc(&lat, &params, 0, Some(2), 5000, 9).unwrap();
        assert_eq!(par, watermelon_mc(&lat, 0.1, 0.5, 0, 2, 2, 5000, 9).unwrap());
        let par = parallel::network_mc(&lat, &params, 0, None, 5000, 9).unwrap();
        assert_eq!(par, star_mc(&lat, 0.1, 0.5, 2, 5000, 9).unwrap());
        let sq = TorusLattice::with_side(2, 2).unwrap();
        let p4 = Phi4Params { n: 3, g: 0.3, nu: 0.2 };
        let par = parallel::phi4_mc(&sq, &p4, 0, 3, 3200, 50, 4).unwrap();
        assert_eq!(par, phi4_mc(&sq, &p4, 0, 3, 3200, 50, 4).unwrap());
    });
}
