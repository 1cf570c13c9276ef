mod common;

use std::fs;

use common::{read, run, table};
use critlog::cache::{cache_path, decode, encode, load_or_build, CacheKey, CacheStatus, CACHE_MAGIC};
use critlog::config::{parse_config, Command, Format, Params, Resolved, VerifyParams};
use critlog::output::{config_hash, sha256_hex, CSV_SCHEMA_VERSION};
use serde_json::Value;

#[test]
fn csv_preamble_carries_version_table_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let r = run("bubble", None, &dir.path().join("b"), &[]);
    assert_eq!(r.code, 0);
    let m: Value = serde_json::from_str(&read(&r.out.join("manifest.json"))).unwrap();
    let hash = m["config_sha256"].as_str().unwrap();
    for name in ["bubble", "bubble_slope"] {
        let t = table(&r.out.join(format!("{name}.csv")));
        assert_eq!(
            t.preamble,
            [format!("# critlog-csv {CSV_SCHEMA_VERSION}"), format!("# table {name}"), format!("# config-sha256 {hash}")]
        );
    }
    // Every file listed in the manifest has the recorded digest.
    for f in m["files"].as_array().unwrap() {
        let bytes = fs::read(r.out.join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(sha256_hex(&bytes), f["sha256"]);
    }
    assert_eq!(m["tool"]["core_version"], critlog_core::VERSION);
}

#[test]
fn json_documents_embed_config_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let r = run("mc-phi4", Some(r#"{"mc-phi4": {"sweeps": 3200}}"#), &dir.path().join("j"), &["--format", "json", "--seed", "11"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let doc: Value = serde_json::from_str(&read(&r.out.join("estimates.json"))).unwrap();
    let m: Value = serde_json::from_str(&read(&r.out.join("manifest.json"))).unwrap();
    assert_eq!(doc["schema"], "critlog-json");
    assert_eq!(doc["config_sha256"], m["config_sha256"]);
    assert_eq!(doc["config"]["params"]["sweeps"], 3200);
    assert_eq!(doc["config"]["seed"], 11);
    assert_eq!(doc["data"].as_array().unwrap().len(), 7);
    assert_eq!(doc["data"][0]["seed"], 11);
}

#[test]
fn hash_depends_on_outputs_only() {
    let base = Resolved { command: Command::Verify, seed: 1, format: Format::Csv, params: Params::Verify(VerifyParams::default()) };
    let h = config_hash(&base);
    assert_eq!(h.len(), 64);
    assert_eq!(h, config_hash(&base.clone()));
    let other_seed = Resolved { seed: 2, ..base.clone() };
    assert_ne!(h, config_hash(&other_seed));
    // Output directory and thread count do not enter the hash.
    let dir = tempfile::tempdir().unwrap();
    let a = run("decompose", Some(r#"{"decompose": {"scales": 6}, "threads": 1}"#), &dir.path().join("a"), &[]);
    let b = run("decompose", Some(r#"{"decompose": {"scales": 6}}"#), &dir.path().join("b"), &["--threads", "2"]);
    let ha: Value = serde_json::from_str(&read(&a.out.join("manifest.json"))).unwrap();
    let hb: Value = serde_json::from_str(&read(&b.out.join("manifest.json"))).unwrap();
    assert_eq!(ha["config_sha256"], hb["config_sha256"]);
}

#[test]
fn defaults_are_filled_and_explicit_nulls_kept() {
    let cfg = parse_config(r#"{"flow": {"g0": 0.01, "b": null}}"#).unwrap();
    let f = cfg.flow.unwrap();
    assert_eq!(f.g0, 0.01);
    assert_eq!(f.n, 1);
    assert!(f.b.is_none());
    let cfg = parse_config(r#"{"flow": {}}"#).unwrap();
    assert_eq!(cfg.flow.unwrap().b, Some(vec![16, 0, 0, 0]));
}

#[test]
fn trailing_garbage_is_rejected() {
    let e = parse_config("{} {}").unwrap_err();
    assert_eq!(e.line, Some(1));
}

#[test]
fn cache_roundtrip_is_bit_identical() {
    let key = CacheKey::new(4, 2, 0.01, 8, 2);
    let dec = key.build().unwrap();
    let bytes = encode(&key, &dec);
    assert_eq!(&bytes[..8], &CACHE_MAGIC);
    let (k, back) = decode(&bytes).unwrap();
    assert_eq!(k, key);
    assert_eq!(encode(&k, &back), bytes);
    for (a, b) in dec.w2.iter().zip(&back.w2) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    // Corrupted header or other version: miss.
    let mut bad = bytes.clone();
    bad[8] ^= 1;
    assert!(decode(&bad).is_none());
    assert!(decode(&bytes[..10]).is_none());
}

#[test]
fn cache_hit_equals_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let key = CacheKey::new(4, 3, 0.0, 6, 1);
    let (first, s1) = load_or_build(Some(dir.path()), &key).unwrap();
    let file = fs::read(cache_path(dir.path(), &key)).unwrap();
    let (second, s2) = load_or_build(Some(dir.path()), &key).unwrap();
    assert_eq!((s1, s2), (CacheStatus::Miss, CacheStatus::Hit));
    assert_eq!(encode(&key, &second), file);
    assert_eq!(encode(&key, &key.build().unwrap()), encode(&key, &first));

    // A file under the right name but another key is rebuilt.
    let other = CacheKey::new(4, 3, 0.0, 5, 1);
    fs::write(cache_path(dir.path(), &key), encode(&other, &other.build().unwrap())).unwrap();
    let (_, s3) = load_or_build(Some(dir.path()), &key).unwrap();
    assert_eq!(s3, CacheStatus::Miss);
}

#[test]
fn decompose_command_uses_and_checks_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cfg = format!(r#"{{"decompose": {{"scales": 10, "cutoff": 2, "verify_cache": true}}, "cache_dir": {:?}}}"#, cache.to_str().unwrap());
    let a = run("decompose", Some(&cfg), &dir.path().join("a"), &[]);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert!(a.stdout.contains("cache \"miss\""));
    let b = run("decompose", Some(&cfg), &dir.path().join("b"), &[]);
    assert_eq!(b.code, 0, "{}", b.stderr);
    assert!(b.stdout.contains("cache \"hit\""));
    let m: Value = serde_json::from_str(&read(&b.out.join("manifest.json"))).unwrap();
    assert_eq!(m["status"]["details"]["bit_identical"], true);
    assert_eq!(read(&a.out.join("decompose.csv")), read(&b.out.join("decompose.csv")));
    let t = table(&a.out.join("decompose.csv"));
    assert_eq!(t.header, ["j", "time", "c00", "c1", "w1", "w2", "dw2", "beta_ratio"]);
    assert_eq!(t.rows.len(), 11);
    assert_eq!(t.column("dw2")[10], "");
}
