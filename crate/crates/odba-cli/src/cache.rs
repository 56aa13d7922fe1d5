//! On-disk result cache keyed by the SHA-256 of the canonical config.
//!
//! Enabled only when `ODBA_CACHE_DIR` is set. Writes go to a temporary file in
//! the cache directory and are renamed into place, so concurrent writers of the
//! same key leave one complete entry.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::run::{Report, Table, VERSION};

pub const CACHE_ENV: &str = "ODBA_CACHE_DIR";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CacheEntry {
    pub report: Report,
    pub table: Table,
}

pub fn cache_key(config: &RunConfig) -> String {
    let mut h = Sha256::new();
    h.update(VERSION.as_bytes());
    h.update([0u8]);
    h.update(config.canonical_json().as_bytes());
    hex::encode(h.finalize())
}

pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|s| !s.is_empty()).map(PathBuf::from)
}

pub fn entry_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.json"))
}

/// A missing or unreadable entry is a miss.
pub fn load(dir: &Path, key: &str) -> Option<CacheEntry> {
    let text = fs::read_to_string(entry_path(dir, key)).ok()?;
    serde_json::from_str(&text).ok()
}

pub fn store(dir: &Path, key: &str, entry: &CacheEntry) -> Result<(), CliError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let tmp = dir.join(format!(".{key}.{}.tmp", std::process::id()));
    fs::write(&tmp, serde_json::to_vec(entry)?).map_err(io(&tmp))?;
    let dest = entry_path(dir, key);
    fs::rename(&tmp, &dest).map_err(io(&dest))
}
