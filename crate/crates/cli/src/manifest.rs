use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Written as `<command>.manifest.json` next to a command's outputs.
/// `config` is the fully resolved command line (seeds included), so
/// `bnrisk replay` can run it again.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub timestamp: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    #[serde(default)]
    pub notes: BTreeMap<String, serde_json::Value>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects inputs, outputs and run notes for one command.
pub struct Run {
    out: PathBuf,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    seeds: BTreeMap<String, u64>,
    notes: BTreeMap<String, serde_json::Value>,
}

impl Run {
    pub fn new(out: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        Ok(Run {
            out: out.to_path_buf(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seeds: BTreeMap::new(),
            notes: BTreeMap::new(),
        })
    }

    pub fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        String::from_utf8(bytes).map_err(|e| CliError::io(path, e))
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.outputs.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(path)
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.seeds.insert(name.to_string(), value);
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("notes are plain data");
        self.notes.insert(key.to_string(), value);
    }

    pub fn finish(self, command: &str, config: serde_json::Value) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            config,
            seeds: self.seeds,
            inputs: self.inputs,
            outputs: self.outputs,
            notes: self.notes,
        };
        let path = self.out.join(format!("{command}.manifest.json"));
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}
