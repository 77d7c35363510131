//! Run manifests: what produced an output file and from which inputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Written next to every output file as `<output>.manifest.json`. Holds no
/// timestamps, so identical inputs give an identical manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seeds: Vec<u64>,
    pub tool_version: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> anyhow::Result<FileDigest> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: Value, seeds: Vec<u64>) -> Self {
        RunManifest {
            command: command.into(),
            config,
            seeds,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> anyhow::Result<()> {
        self.inputs.push(digest_file(path)?);
        Ok(())
    }

    /// Writes `bytes` to `output`, records its digest and writes the
    /// manifest beside it.
    pub fn write_output(mut self, output: &Path, bytes: &[u8]) -> anyhow::Result<PathBuf> {
        fs::write(output, bytes).with_context(|| format!("writing {}", output.display()))?;
        self.outputs.push(FileDigest {
            path: output.display().to_string(),
            sha256: sha256_hex(bytes),
        });
        let path = manifest_path(output);
        let mut text = serde_json::to_string_pretty(&self)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
