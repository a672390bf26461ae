//! Per-run manifest: the resolved command plus everything needed to re-execute it.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::args::Command;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub siren2: String,
    pub report_schema: u32,
    pub checkpoint_format: u32,
    pub manifest_schema: u32,
}

impl Versions {
    pub fn current() -> Self {
        Self {
            siren2: env!("CARGO_PKG_VERSION").to_string(),
            report_schema: siren2::training::REPORT_SCHEMA_VERSION,
            checkpoint_format: siren2::network::CHECKPOINT_VERSION,
            manifest_schema: MANIFEST_SCHEMA_VERSION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    /// Resolved arguments, tagged by subcommand name.
    pub run: Command,
    pub seed: Option<u64>,
    pub versions: Versions,
    pub inputs: Vec<String>,
    pub outputs: Vec<PathBuf>,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
    /// Set when this run re-executed another manifest.
    pub rerun_of: Option<PathBuf>,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

pub fn manifest_path(out: &Path) -> PathBuf {
    out.join(MANIFEST_FILE)
}
