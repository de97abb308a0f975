//! Run manifests: what was run, with which resolved inputs and seed.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the compact JSON encoding of `resolved`.
    pub config_digest: String,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub timestamp: String,
    pub resolved: Value,
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, resolved: Value, seed: Option<u64>) -> Self {
        Self {
            command: command.to_owned(),
            config_digest: digest(&resolved),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            resolved,
            outputs: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        crate::report::write_json(path, self)
    }
}

/// `serde_json` keeps struct fields in declaration order and `Value`
/// objects sorted, so equal inputs always encode to the same bytes.
pub fn digest(resolved: &Value) -> String {
    let bytes = serde_json::to_vec(resolved).expect("JSON values always serialize");
    hex::encode(Sha256::digest(&bytes))
}
