//! Output files: versioned CSV tables, JSON documents and the run manifest.
//!
//! CSV files start with `#`-prefixed preamble lines:
//!
//! ```text
//! # critlog-csv 1
//! # table flow
//! # config-sha256 <hex>
//! ```
//!
//! followed by a header row and the data rows. Floats are written in the
//! shortest form that parses back to the same value.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::Resolved;

/// Bumped on any change of column names, order or meaning.
pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const JSON_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of the canonical JSON of the resolved config.
pub fn config_hash(resolved: &Resolved) -> String {
    let text = serde_json::to_string(&resolved.canonical()).expect("config serialises");
    sha256_hex(text.as_bytes())
}

/// Shortest round-trip float text.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn coords(x: &[i64]) -> String {
    x.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

/// Writes tables into one output directory and remembers what it wrote.
pub struct Sink {
    dir: PathBuf,
    hash: String,
    config: Value,
    pub files: Vec<FileEntry>,
}

impl Sink {
    pub fn new(dir: &Path, resolved: &Resolved) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Sink { dir: dir.to_path_buf(), hash: config_hash(resolved), config: resolved.canonical(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileEntry { name: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    /// `<table>.csv` with the versioned preamble.
    pub fn csv(&mut self, table: &str, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
        let mut buf = format!("# critlog-csv {CSV_SCHEMA_VERSION}\n# table {table}\n# config-sha256 {}\n", self.hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for r in rows {
                debug_assert_eq!(r.len(), header.len());
                w.write_record(r)?;
            }
            w.flush()?;
        }
        self.write(&format!("{table}.csv"), &buf)
    }

    /// `<table>.json`: `{schema, version, table, config_sha256, config, data}`.
    pub fn json<T: Serialize>(&mut self, table: &str, data: &T) -> io::Result<()> {
        let doc = json!({
            "schema": "critlog-json",
            "version": JSON_SCHEMA_VERSION,
            "table": table,
            "config_sha256": self.hash,
            "config": self.config,
            "data": data,
        });
        let mut text = serde_json::to_string_pretty(&doc).map_err(io::Error::other)?;
        text.push('\n');
        self.write(&format!("{table}.json"), text.as_bytes())
    }
}

/// Outcome recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Status {
    pub status: &'static str,
    pub exit_code: i32,
    pub message: Option<String>,
    pub details: Option<Value>,
}

/// `manifest.json`: config, hash, versions, seeds, outputs and status.
pub fn write_manifest(sink: &Sink, resolved: &Resolved, seeds: &[u64], status: &Status) -> io::Result<()> {
    let doc = json!({
        "schema": "critlog-manifest",
        "version": JSON_SCHEMA_VERSION,
        "tool": { "name": "critlog", "version": env!("CARGO_PKG_VERSION"), "core_version": critlog_core::VERSION },
        "csv_schema": CSV_SCHEMA_VERSION,
        "command": resolved.command.name(),
        "config": resolved.canonical(),
        "config_sha256": sink.hash(),
        "seeds": seeds,
        "files": sink.files,
        "status": status,
    });
    let mut text = serde_json::to_string_pretty(&doc).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(sink.dir().join(MANIFEST_NAME), text)
}
