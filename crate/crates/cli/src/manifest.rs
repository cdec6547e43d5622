use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fleet::FleetSpec;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub sessions: usize,
    pub trials: usize,
    pub excluded_sessions: usize,
    pub exclusions: BTreeMap<String, usize>,
}

/// Describes one CLI run. Written before any output, then rewritten with the
/// summary once the outputs exist; output paths are relative to `output_dir`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_path: Option<String>,
    pub seed: u64,
    pub output_dir: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agents: Option<FleetSpec>,
    pub outputs: Vec<String>,
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<RunSummary>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl RunManifest {
    pub fn new(command: &str, config_path: Option<&Path>, seed: u64, out: &Path) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_path: config_path.map(|p| p.display().to_string()),
            seed,
            output_dir: out.display().to_string(),
            agents: None,
            outputs: Vec::new(),
            complete: false,
            summary: None,
        }
    }

    pub fn write(&self, out: &Path) -> Result<()> {
        fs::create_dir_all(out)?;
        fs::write(out.join(MANIFEST_FILE), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(dir.join(MANIFEST_FILE))?)?)
    }
}
