//! Run manifests: effective settings plus SHA-256 digests of inputs and
//! outputs. No timestamps or absolute output paths, so two runs of the same
//! configuration produce comparable manifests.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::corpus_io::files_under;
use crate::error::{io_err, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub settings: BTreeMap<String, Value>,
    pub config_sha256: Option<String>,
    /// Input file or directory name to its digest. A directory digest covers
    /// the relative path and content of every file below it.
    pub inputs: BTreeMap<String, String>,
    /// Output file name to digest.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    d.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_path(path: &Path) -> Result<String> {
    if path.is_file() {
        return Ok(sha256_hex(&std::fs::read(path).map_err(io_err(path))?));
    }
    let mut h = Sha256::new();
    for f in files_under(path)? {
        let rel = f.strip_prefix(path).unwrap_or(&f);
        let rel = rel.to_string_lossy().replace('\\', "/");
        h.update(rel.as_bytes());
        h.update([0]);
        h.update(sha256_hex(&std::fs::read(&f).map_err(io_err(&f))?).as_bytes());
        h.update(b"\n");
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            settings: BTreeMap::new(),
            config_sha256: None,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn setting(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.settings.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        self.inputs.insert(file_name(path), digest_path(path)?);
        Ok(self)
    }

    pub fn output(&mut self, path: &Path, bytes: &[u8]) -> &mut Self {
        self.outputs.insert(file_name(path), sha256_hex(bytes));
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
