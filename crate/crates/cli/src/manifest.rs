use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Ok(FileDigest {
            path: path.to_path_buf(),
            sha256: sha256_hex(&bytes),
        })
    }
}

/// Digests for files written into a run directory, named relative to it.
pub fn output_digests(paths: &[PathBuf]) -> Result<Vec<FileDigest>, CliError> {
    paths
        .iter()
        .map(|p| {
            let mut d = FileDigest::of(p)?;
            d.path = PathBuf::from(p.file_name().unwrap_or(p.as_os_str()));
            Ok(d)
        })
        .collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes).as_slice())
}

/// Enough to repeat a command exactly: the fully defaulted config, seeds,
/// input digests and the RNG derivation scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub tool_version: String,
    pub rng_scheme: String,
    /// SHA-256 of the compact JSON encoding of `config`.
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    /// Relative to the run directory.
    pub outputs: Vec<FileDigest>,
    /// Per-stage details of each executed pipeline, when any ran.
    #[serde(default)]
    pub pipelines: serde_json::Value,
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, run_id: &str, config: &C, seeds: Vec<u64>) -> Result<Self, CliError> {
        let config = serde_json::to_value(config).map_err(|e| CliError::Data(e.to_string()))?;
        Ok(RunManifest {
            run_id: run_id.to_string(),
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            rng_scheme: gapfair::rng::SCHEME.to_string(),
            config_hash: config_hash(&config),
            seeds,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            pipelines: serde_json::Value::Null,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Data(e.to_string()))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    /// Fails when any recorded input changed since the manifest was written.
    pub fn verify_inputs(&self) -> Result<(), CliError> {
        for d in &self.inputs {
            let now = FileDigest::of(&d.path)?;
            if now.sha256 != d.sha256 {
                return Err(CliError::Data(format!(
                    "{} changed since the manifest was written (sha256 {} != {})",
                    d.path.display(),
                    now.sha256,
                    d.sha256
                )));
            }
        }
        Ok(())
    }
}

pub fn config_hash(config: &serde_json::Value) -> String {
    sha256_hex(config.to_string().as_bytes())
}
