//! Run manifests: everything needed to repeat a run byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

/// No timestamps or host data, so identical runs give identical manifests.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub argv: Vec<String>,
    pub inputs: Vec<InputFile>,
    pub parameters: Value,
    pub seeds: Value,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &'static str, argv: &[String]) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            argv: argv.to_vec(),
            inputs: Vec::new(),
            parameters: Value::Null,
            seeds: Value::Null,
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
        self.inputs.push(InputFile {
            path: path.display().to_string(),
            sha256: format!("{:x}", Sha256::digest(&bytes)),
        });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing manifest {}", path.display()))
    }

    /// Write `<out>.manifest.json` for every recorded output.
    pub fn write_sidecars(&self) -> Result<Vec<PathBuf>> {
        self.outputs
            .iter()
            .map(|out| {
                let path = inertia_core::ingestion::manifest_path(Path::new(out));
                self.write(&path).map(|_| path)
            })
            .collect()
    }
}
