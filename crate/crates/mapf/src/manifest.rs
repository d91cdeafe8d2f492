//! Run manifests: what a run read, how it was configured and where it wrote.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Overrides;
use crate::error::{CliError, Result};
use crate::wav::Format;

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Audio read directly by the command (mixture, references).
    pub inputs: Vec<PathBuf>,
    pub scene: PathBuf,
    /// Files the scene refers to.
    pub scene_inputs: Vec<PathBuf>,
    pub config_file: Option<PathBuf>,
    /// Settings given on the command line.
    pub overrides: Overrides,
    pub output_dir: PathBuf,
    pub diagnostics: bool,
    pub taps: bool,
    pub format: Format,
    pub seed: u64,
    /// SHA-256 of every file above, keyed by path.
    pub input_sha256: BTreeMap<PathBuf, String>,
}

/// Absolute form of a path, without touching the file system.
pub fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).map_err(|e| CliError::io(p, e))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    /// Hashes every listed input file.
    pub fn hash_inputs(&mut self) -> Result<()> {
        let mut files: Vec<PathBuf> = self.inputs.iter().chain(&self.scene_inputs).cloned().collect();
        files.push(self.scene.clone());
        files.extend(self.config_file.clone());
        for f in files {
            let h = file_sha256(&f)?;
            self.input_sha256.insert(f, h);
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(FILE_NAME);
        std::fs::write(&path, self.to_json()).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
