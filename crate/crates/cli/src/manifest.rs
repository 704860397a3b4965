use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use shine_core::TrainConfig;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(role: &str, path: &Path, bytes: &[u8]) -> Self {
        Self {
            role: role.into(),
            path: path.to_path_buf(),
            sha256: sha256_hex(bytes),
        }
    }
}

/// Record of one training run. Written with status `running` before any
/// training happens and rewritten once the run ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub status: RunStatus,
    pub error: Option<String>,
    pub config: TrainConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Unix seconds.
    pub started_at: u64,
    pub finished_at: Option<u64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn begin(
        command: &str,
        config: &TrainConfig,
        out_dir: &Path,
        inputs: Vec<FileDigest>,
    ) -> Self {
        Self {
            command: command.into(),
            status: RunStatus::Running,
            error: None,
            config: config.clone(),
            seed: config.seed,
            out_dir: out_dir.to_path_buf(),
            inputs,
            outputs: Vec::new(),
            started_at: unix_now(),
            finished_at: None,
        }
    }

    pub fn finish(&mut self, result: Result<Vec<FileDigest>, &CliError>) {
        self.finished_at = Some(unix_now());
        match result {
            Ok(outputs) => {
                self.status = RunStatus::Succeeded;
                self.outputs = outputs;
            }
            Err(e) => {
                self.status = RunStatus::Failed;
                self.error = Some(e.to_string());
            }
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Internal(format!("manifest: {e}")))?;
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("{}: cannot write: {e}", path.display())))
    }
}
