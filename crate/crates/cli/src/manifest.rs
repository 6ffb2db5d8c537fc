//! Run manifests: the config snapshot, flag overrides, library version, and
//! a digest of the emitted artifact, written next to every output so a run
//! can be replayed and checked byte for byte.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub overrides: Value,
    pub library_version: String,
    pub unix_time: u64,
    pub output_path: String,
    pub output_sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: Value,
        overrides: Value,
        out_path: &Path,
        bytes: &[u8],
    ) -> Self {
        RunManifest {
            command: command.to_string(),
            config,
            overrides,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            unix_time: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            output_path: out_path.display().to_string(),
            output_sha256: sha256_hex(bytes),
        }
    }

    pub fn write_next_to(&self, out_path: &Path) -> std::io::Result<()> {
        let mut manifest_path = out_path.as_os_str().to_owned();
        manifest_path.push(".manifest.json");
        let body = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(manifest_path, body)
    }
}
