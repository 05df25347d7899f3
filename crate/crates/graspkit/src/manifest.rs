//! Run manifests: every output-producing CLI run writes a
//! `<output>.manifest.json` recording the subcommand, its normalized
//! arguments, the seed, the tool version, and SHA-256 digests of every input
//! file, so the run can be replayed byte-identically.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// On-disk model format identifier (header of model files).
pub const MODEL_FORMAT: &str = "GLW1";
/// Record JSONL schema identifier.
pub const RECORD_SCHEMA: &str = "records-jsonl-1";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest format error: {0}")]
    Format(String),
    #[error("input digest mismatch for {0}: manifest {1}, file {2}")]
    DigestMismatch(String, String, String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Flag/value pairs with leading dashes stripped, sorted by flag name.
    /// Boolean flags carry an empty value.
    pub arguments: Vec<(String, String)>,
    pub seed: u64,
    pub tool_version: String,
    pub input_digests: Vec<(String, String)>,
}

pub fn sha256_hex_file(path: &Path) -> Result<String, ManifestError> {
    let bytes = fs::read(path)?;
    let mut h = Sha256::new();
    h.update(&bytes);
    Ok(format!("{:x}", h.finalize()))
}

impl RunManifest {
    pub fn new(
        command: &str,
        arguments: &[(String, String)],
        seed: u64,
        inputs: &[PathBuf],
    ) -> Result<Self, ManifestError> {
        let mut args: Vec<(String, String)> = arguments.to_vec();
        args.sort();
        let mut digests = Vec::with_capacity(inputs.len());
        let mut paths: Vec<&PathBuf> = inputs.iter().collect();
        paths.sort();
        for p in paths {
            digests.push((p.display().to_string(), sha256_hex_file(p)?));
        }
        Ok(RunManifest {
            command: command.to_string(),
            arguments: args,
            seed,
            tool_version: TOOL_VERSION.to_string(),
            input_digests: digests,
        })
    }

    /// Reconstruct an argv equivalent to the recorded invocation.
    pub fn to_argv(&self) -> Vec<String> {
        let mut argv: Vec<String> = self.command.split_whitespace().map(String::from).collect();
        for (k, v) in &self.arguments {
            argv.push(format!("--{k}"));
            if !v.is_empty() {
                argv.push(v.clone());
            }
        }
        argv
    }

    /// Check that every recorded input still hashes to its recorded digest.
    pub fn verify_inputs(&self) -> Result<(), ManifestError> {
        for (path, digest) in &self.input_digests {
            let now = sha256_hex_file(Path::new(path))?;
            if &now != digest {
                return Err(ManifestError::DigestMismatch(
                    path.clone(),
                    digest.clone(),
                    now,
                ));
            }
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), ManifestError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| ManifestError::Format(e.to_string()))?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, ManifestError> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| ManifestError::Format(e.to_string()))
    }
}

/// `<output>.manifest.json`, next to the output file or directory.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    name.push_str(".manifest.json");
    output.with_file_name(name)
}
