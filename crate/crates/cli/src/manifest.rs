use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{io_error, CliError};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one invocation, written beside its outputs. Re-running the
/// recorded arguments reproduces every output except this file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config_paths: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    /// Relative to the output directory.
    pub outputs: Vec<PathBuf>,
    pub timestamp: String,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            args: std::env::args().skip(1).collect(),
            config_paths: Vec::new(),
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timestamp: chrono::Local::now().format("%Y-%m-%dT%H:%M:%S%:z").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    pub fn output(&mut self, out_dir: &Path, path: &Path) {
        self.outputs
            .push(path.strip_prefix(out_dir).unwrap_or(path).to_path_buf());
    }

    pub fn write(mut self, out_dir: &Path) -> Result<(), CliError> {
        self.outputs.sort();
        let path = out_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes") + "\n";
        std::fs::write(&path, text).map_err(|e| io_error("cli::manifest", &path, e))
    }
}
