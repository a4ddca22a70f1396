//! Run manifests: every output directory gets exactly one `manifest.json`
//! recording the command, its configuration snapshot, the seed, and content
//! hashes of every input file, so a run can be audited and reproduced.
//! Manifests carry no timestamps; identical runs write identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::EmbeddingMode;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub embedding_mode: EmbeddingMode,
    pub config: serde_json::Value,
    pub inputs: Vec<InputHash>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        seed: u64,
        embedding_mode: EmbeddingMode,
        config: serde_json::Value,
    ) -> Self {
        RunManifest {
            tool: "gcnsumm".to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            embedding_mode,
            config,
            inputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> anyhow::Result<()> {
        self.inputs.push(InputHash {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    /// Writes `manifest.json` into `dir`, creating the directory if needed.
    pub fn write(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }

    /// Recomputes the input hashes and compares them against the recorded
    /// ones. Returns the list of mismatching paths.
    pub fn verify_inputs(&self) -> anyhow::Result<Vec<String>> {
        let mut stale = Vec::new();
        for input in &self.inputs {
            let current = sha256_file(Path::new(&input.path))?;
            if current != input.sha256 {
                stale.push(input.path.clone());
            }
        }
        Ok(stale)
    }
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path)
        .map_err(|e| anyhow::anyhow!("cannot hash {}: {e}", path.display()))?;
    let digest = Sha256::digest(&bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    Ok(out)
}
