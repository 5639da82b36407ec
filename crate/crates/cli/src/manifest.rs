use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::failure::Failure;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub path: PathBuf,
    pub sha256: String,
    pub users: usize,
    pub tracks: usize,
    pub interactions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub config: String,
    pub metrics: String,
    pub user_metrics: String,
    pub accepted: String,
    pub checkpoints: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Effective configuration, identical to `config.toml`.
    pub config: String,
    pub config_sha256: String,
    pub seed: u64,
    pub dataset: DatasetInfo,
    pub started_at: String,
    pub finished_at: Option<String>,
    /// `running`, `completed` or `failed`.
    pub status: String,
    pub error: Option<String>,
    pub resumed_from: Vec<PathBuf>,
    pub outputs: Outputs,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String, Failure> {
    let bytes = std::fs::read(path)
        .map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

impl Manifest {
    pub fn write(&self, run_dir: &Path) -> Result<(), Failure> {
        let path = run_dir.join(MANIFEST_FILE);
        let tmp = run_dir.join(format!("{MANIFEST_FILE}.tmp"));
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&tmp, json + "\n")
            .and_then(|_| std::fs::rename(&tmp, &path))
            .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))
    }

    pub fn read(run_dir: &Path) -> Result<Self, Failure> {
        let path = run_dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::new(3, format!("{}: {e}", path.display())))
    }

    pub fn finish(&mut self, result: &Result<(), Failure>) {
        self.finished_at = Some(now());
        match result {
            Ok(()) => {
                self.status = "completed".into();
                self.error = None;
            }
            Err(e) => {
                self.status = "failed".into();
                self.error = Some(e.message.clone());
            }
        }
    }
}
