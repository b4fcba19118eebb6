use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Evaluation summary written as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Candidate vs realistic reference set.
    pub fad_r: f64,
    /// Candidate vs concatenative-sampler output, when that set is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fad_t: Option<f64>,
    /// Note scores against the source scores, when those are given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    pub reference_size: usize,
    pub concat_size: usize,
    pub candidate_size: usize,
    pub config_hash: String,
}

impl MetricReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain struct serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }
}

/// 64-bit FNV-1a of `text`, as 16 hex digits.
pub fn config_hash(text: &str) -> String {
    content_hash(text.as_bytes())
}

pub fn content_hash(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}
