//! Run manifests: a JSON record of the resolved configuration, input digests
//! and output paths of every CLI invocation, written next to the primary
//! output.
//!
//! Manifests carry no timestamps and no execution parameters (such as the
//! worker count) that cannot change the results, so byte-identical inputs
//! and flags produce byte-identical manifests.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::series_io;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub command: String,
    pub config: RunConfig,
    pub params: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: RunConfig, params: impl Serialize) -> Self {
        Self {
            tool: format!("eop {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            config,
            params: serde_json::to_value(params).expect("params serialize"),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> anyhow::Result<()> {
        let bytes = std::fs::read(path)
            .map_err(|e| anyhow::anyhow!("cannot digest input {}: {e}", path.display()))?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let sha256 = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.push(InputDigest { path: path.display().to_string(), sha256 });
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Serializes and writes atomically.
    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        series_io::atomic_write(path, json.as_bytes())?;
        Ok(())
    }
}

/// Default manifest location: next to the primary output when there is one,
/// otherwise `eop-<command>.manifest.json` in the working directory.
pub fn default_manifest_path(command: &str, primary_output: Option<&Path>) -> PathBuf {
    match primary_output {
        Some(out) => {
            let mut name = out.as_os_str().to_owned();
            name.push(".manifest.json");
            PathBuf::from(name)
        }
        None => PathBuf::from(format!("eop-{command}.manifest.json")),
    }
}
