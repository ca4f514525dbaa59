use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl Artifact {
    pub fn of(path: &Path) -> CliResult<Self> {
        let data = std::fs::read(path).map_err(CliError::io(path))?;
        Ok(Self {
            path: path.display().to_string(),
            sha256: sha256_hex(&data),
            bytes: data.len() as u64,
        })
    }
}

/// Record of one command invocation and every file it wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_sha256: Option<String>,
    pub seeds: BTreeMap<String, u64>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    format!("{:x}", Sha256::digest(data))
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn start(command: &str, config: Option<&[u8]>) -> Self {
        Self {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_sha256: config.map(sha256_hex),
            seeds: BTreeMap::new(),
            started_unix: unix_now(),
            finished_unix: 0,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.seeds.insert(name.into(), value);
    }

    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        self.inputs.push(Artifact::of(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> CliResult<()> {
        self.outputs.push(Artifact::of(path)?);
        Ok(())
    }

    /// Stamps the finish time and writes the manifest as pretty JSON.
    pub fn finish(mut self, path: &Path) -> CliResult<Self> {
        self.finished_unix = unix_now();
        let json = serde_json::to_vec_pretty(&self).expect("manifest serializes");
        std::fs::write(path, json).map_err(CliError::io(path))?;
        Ok(self)
    }
}

/// `<out>.manifest.json` next to a file output.
pub fn manifest_path(out: &Path) -> std::path::PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    s.into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
