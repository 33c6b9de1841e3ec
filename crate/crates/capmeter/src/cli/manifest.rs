use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{write_file, CliError};

/// Everything needed to reproduce an output file. Reruns with an identical
/// manifest (timestamp aside) produce identical numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    /// Effective configuration after defaults were applied.
    pub config: serde_json::Value,
    pub master_seed: u64,
    pub versions: BTreeMap<String, String>,
    /// SHA-256 of every input file, keyed by path.
    pub input_digests: BTreeMap<String, String>,
    /// RFC 3339, UTC.
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command_line: &[String], config: serde_json::Value, master_seed: u64) -> Self {
        let versions = BTreeMap::from([(env!("CARGO_PKG_NAME").to_string(), env!("CARGO_PKG_VERSION").to_string())]);
        Self {
            command_line: command_line.to_vec(),
            config,
            master_seed,
            versions,
            input_digests: BTreeMap::new(),
            timestamp: humantime::format_rfc3339_seconds(std::time::SystemTime::now()).to_string(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes =
            std::fs::read(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        self.input_digests.insert(path.display().to_string(), digest);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).map_err(|e| CliError::config(e.to_string()))?;
        write_file(path, &(json + "\n"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digests_are_sha256_hex() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        std::fs::write(&p, "abc").unwrap();
        let mut m = RunManifest::new(&["capmeter".into()], serde_json::json!({}), 0);
        m.add_input(&p).unwrap();
        assert_eq!(
            m.input_digests[&p.display().to_string()],
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert!(m.timestamp.ends_with('Z'));
    }
}
