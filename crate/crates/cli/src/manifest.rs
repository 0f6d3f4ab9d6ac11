use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;
use crate::failure::Failure;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

/// Everything needed to repeat a run. Thread count and wall-clock time are
/// recorded but never affect outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Command,
    pub seed: Option<u64>,
    pub input: Option<PathBuf>,
    pub input_sha256: Option<String>,
    pub outputs: Vec<OutputDigest>,
    pub threads: usize,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn load(path: &Path) -> Result<Manifest, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Input paths in a manifest are as given on the original command line; a
/// relative path that does not exist is retried next to the manifest.
pub fn locate_input(recorded: &Path, manifest_path: &Path) -> PathBuf {
    if recorded.is_absolute() || recorded.exists() {
        return recorded.to_path_buf();
    }
    match manifest_path.parent() {
        Some(dir) if dir.join(recorded).exists() => dir.join(recorded),
        _ => recorded.to_path_buf(),
    }
}
