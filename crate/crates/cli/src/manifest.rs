use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::failure::{CliResult, Failure};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance of one output set.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    /// Input path → sha256.
    pub inputs: BTreeMap<String, String>,
    /// Output file name → sha256.
    pub outputs: BTreeMap<String, String>,
    pub norm_fingerprints: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

pub fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

pub fn digest_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    Ok(cogbridge::sha256_hex(&bytes))
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let fail = |e: std::io::Error| Failure::input(format!("cannot write {}: {e}", path.display()));
    std::fs::write(&tmp, bytes).map_err(fail)?;
    std::fs::rename(&tmp, path).map_err(fail)
}

impl RunManifest {
    pub fn new(seed: Option<u64>, config: serde_json::Value, started_unix: u64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: std::env::args().collect(),
            seed,
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            norm_fingerprints: Vec::new(),
            started_unix,
            finished_unix: 0,
        }
    }

    pub fn add_inputs(&mut self, paths: &[PathBuf]) -> CliResult<()> {
        for p in paths {
            self.inputs.insert(p.display().to_string(), digest_file(p)?);
        }
        Ok(())
    }

    pub fn add_outputs(&mut self, dir: &Path, names: &[String]) -> CliResult<()> {
        for n in names {
            self.outputs.insert(n.clone(), digest_file(&dir.join(n))?);
        }
        Ok(())
    }

    pub fn save(mut self, path: &Path) -> CliResult<()> {
        self.finished_unix = now_unix();
        let body =
            serde_json::to_vec_pretty(&self).map_err(|e| Failure::internal(e.to_string()))?;
        write_atomic(path, &body)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| Failure::input(format!("{}: bad manifest: {e}", path.display())))
    }
}
