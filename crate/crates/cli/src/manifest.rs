use std::path::Path;

use serde::{Deserialize, Serialize};

/// Written next to every output so the run can be repeated exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full command line.
    pub args: Vec<String>,
    /// `None` when the built-in default configuration was used.
    pub config_path: Option<String>,
    /// The configuration actually used, as TOML.
    pub config: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub output_dir: String,
    pub code_version: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, output_dir: &Path) -> Self {
        RunManifest {
            command: command.to_string(),
            args: std::env::args().collect(),
            config_path: None,
            config: String::new(),
            policy: None,
            seeds: Vec::new(),
            episodes: 0,
            output_dir: output_dir.display().to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            status: "ok".to_string(),
            errors: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(dir.join("manifest.json"), text + "\n")
    }
}
