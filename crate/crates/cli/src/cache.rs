//! Binary cache of heat-slab decompositions.
//!
//! Layout: 8-byte magic, little-endian `u32` format version, then the
//! bincode encoding of `(CacheKey, Decomposition)`. Files are keyed by
//! `(d, L, m², J, cutoff)`; a file whose header or key does not match is
//! treated as a miss and overwritten.

use std::fs;
use std::path::{Path, PathBuf};

use critlog_core::covariance::{decompose, Decomposition};
use serde::{Deserialize, Serialize};

pub const CACHE_MAGIC: [u8; 8] = *b"CRTLDEC\0";
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheKey {
    pub d: usize,
    pub l: u64,
    /// `m²` as IEEE bits so that the key is exact.
    pub m2_bits: u64,
    pub scales: u32,
    pub cutoff: i64,
}

impl CacheKey {
    pub fn new(d: usize, l: u64, m2: f64, scales: u32, cutoff: i64) -> Self {
        CacheKey { d, l, m2_bits: m2.to_bits(), scales, cutoff }
    }

    pub fn m2(&self) -> f64 {
        f64::from_bits(self.m2_bits)
    }

    pub fn file_name(&self) -> String {
        format!("dec-d{}-L{}-m2x{:016x}-J{}-c{}.bin", self.d, self.l, self.m2_bits, self.scales, self.cutoff)
    }

    pub fn build(&self) -> critlog_core::Result<Decomposition> {
        decompose(self.d, self.l, self.m2(), self.scales, self.cutoff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheStatus {
    Hit,
    Miss,
    Off,
}

pub fn encode(key: &CacheKey, dec: &Decomposition) -> Vec<u8> {
    let mut out = CACHE_MAGIC.to_vec();
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    out.extend(bincode::serialize(&(key, dec)).expect("decomposition serialises"));
    out
}

/// `None` for anything that is not a current-version cache file.
pub fn decode(bytes: &[u8]) -> Option<(CacheKey, Decomposition)> {
    let body = bytes.strip_prefix(&CACHE_MAGIC)?;
    let (version, body) = body.split_first_chunk::<4>()?;
    if u32::from_le_bytes(*version) != CACHE_VERSION {
        return None;
    }
    bincode::deserialize(body).ok()
}

pub fn cache_path(dir: &Path, key: &CacheKey) -> PathBuf {
    dir.join(key.file_name())
}

/// Cached decomposition if present, otherwise build (and store when a
/// cache directory is given).
pub fn load_or_build(dir: Option<&Path>, key: &CacheKey) -> Result<(Decomposition, CacheStatus), CacheFailure> {
    let Some(dir) = dir else {
        return Ok((key.build()?, CacheStatus::Off));
    };
    let path = cache_path(dir, key);
    if let Ok(bytes) = fs::read(&path) {
        if let Some((k, dec)) = decode(&bytes) {
            if k == *key {
                return Ok((dec, CacheStatus::Hit));
            }
        }
    }
    let dec = key.build()?;
    fs::create_dir_all(dir)?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, encode(key, &dec))?;
    fs::rename(&tmp, &path)?;
    Ok((dec, CacheStatus::Miss))
}

#[derive(Debug)]
pub enum CacheFailure {
    Core(critlog_core::Error),
    Io(std::io::Error),
}

impl From<critlog_core::Error> for CacheFailure {
    fn from(e: critlog_core::Error) -> Self {
        CacheFailure::Core(e)
    }
}

impl From<std::io::Error> for CacheFailure {
    fn from(e: std::io::Error) -> Self {
        CacheFailure::Io(e)
    }
}

/// Bitwise equality of two decompositions, field by field.
pub fn bit_identical(a: &Decomposition, b: &Decomposition) -> bool {
    bincode::serialize(a).ok() == bincode::serialize(b).ok()
}
