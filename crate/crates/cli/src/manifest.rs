//! Run manifests: everything needed to reproduce a run and to check its
//! outputs.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize)]
pub struct OutputRecord {
    pub role: String,
    pub path: PathBuf,
    pub bytes: usize,
    pub sha256: String,
}

impl OutputRecord {
    pub fn new(role: &str, path: &Path, contents: &[u8]) -> Self {
        Self {
            role: role.to_string(),
            path: path.to_path_buf(),
            bytes: contents.len(),
            sha256: sha256_hex(contents),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub cli_version: &'static str,
    pub core_version: &'static str,
    pub command_line: Vec<String>,
    pub subcommand: String,
    /// Every parameter after defaults were applied.
    pub parameters: serde_json::Value,
    /// Parameters that were not given on the command line.
    pub defaulted: Vec<String>,
    pub seeds: Vec<u64>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub exit_code: i32,
    pub outputs: Vec<OutputRecord>,
    pub results: serde_json::Value,
}
