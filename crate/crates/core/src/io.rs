//! Output plumbing: atomic file writes, canonical hashing and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Write `bytes` to `path` via a sibling temp file and rename, so readers
/// never observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Compact JSON with object keys sorted, independent of platform and field order.
pub fn canonical_json(value: &Value) -> String {
    // serde_json's default map is ordered by key
    let sorted: Value =
        serde_json::from_str(&value.to_string()).expect("re-parsing serialized JSON");
    sorted.to_string()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Stable digest of any serializable document.
pub fn canonical_hash<T: Serialize>(doc: &T) -> Result<String> {
    let v = serde_json::to_value(doc)?;
    Ok(sha256_hex(canonical_json(&v).as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub scenario_hash: Option<String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_s: f64,
    /// Every effective setting after file, environment and flag precedence.
    pub effective: Value,
}

/// Writes a set of named outputs under one directory and records them.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputSet {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            written: Vec::new(),
        }
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        atomic_write(&path, contents.as_bytes())?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, doc: &T) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(doc)?;
        s.push('\n');
        self.write(name, &s)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}
