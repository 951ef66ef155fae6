//! Run manifests: everything needed to repeat a training run exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dcidc::data::{DataFormat, NormalizeMode};
use dcidc::trainer::TrainConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: PathBuf,
    /// Hex SHA-256 of the file bytes.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub features: InputFile,
    pub format: DataFormat,
    pub labels: Option<InputFile>,
    pub normalize: Option<NormalizeMode>,
    pub mask_unlabeled: bool,
    /// `[height, width]` of the unmasked image.
    pub image: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub engine_version: String,
    pub config: TrainConfig,
    pub data: DataSpec,
    /// Artifact name → path, relative to the output directory.
    pub artifacts: BTreeMap<String, PathBuf>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn fingerprint(path: &Path) -> CliResult<InputFile> {
    let bytes = fs::read(path).map_err(|e| dcidc::Error::io(path, e))?;
    let absolute = fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf());
    Ok(InputFile {
        path: absolute,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

impl InputFile {
    /// Fails when the file changed since the manifest was written.
    pub fn verify(&self) -> CliResult<()> {
        let now = fingerprint(&self.path)?;
        if now.sha256 != self.sha256 {
            return Err(CliError::Invalid(format!(
                "{}: content changed since the manifest was written (sha256 {} != {})",
                self.path.display(),
                now.sha256,
                self.sha256
            )));
        }
        Ok(())
    }
}

impl RunManifest {
    pub fn save(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| dcidc::Error::io(path, e).into())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| dcidc::Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
    }
}
