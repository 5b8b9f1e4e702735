//! Run manifests: what was run, with which seeds, and the digest of every
//! file it produced.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::io::config::{ExperimentKind, RunConfig};
use crate::io::digest::{sha256_hex, write_atomic};
use crate::io::table::masked_digest_of_csv;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactRecord {
    /// Path relative to the output directory.
    pub path: String,
    /// SHA-256 of the content, without `masked_columns` for CSV files.
    pub sha256: String,
    pub bytes: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub masked_columns: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub version: String,
    pub experiment: ExperimentKind,
    pub config_hash: String,
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    pub sub_runs: usize,
    /// RFC 3339, UTC.
    pub started: String,
    pub finished: String,
    pub artifacts: Vec<ArtifactRecord>,
}

/// Outcome of comparing one recorded digest against a file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DigestCheck {
    pub path: String,
    pub expected: String,
    /// `None` when the file is missing.
    pub actual: Option<String>,
}

impl DigestCheck {
    pub fn matches(&self) -> bool {
        self.actual.as_deref() == Some(self.expected.as_str())
    }
}

/// Digest of a file as recorded in manifests.
pub fn file_digest(path: &Path, masked: &[String]) -> Result<String> {
    let bytes = fs::read(path)?;
    if masked.is_empty() {
        Ok(sha256_hex(&bytes))
    } else {
        masked_digest_of_csv(&bytes, masked)
    }
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read manifest {}: {e}", path.display())))?;
        let m: RunManifest = serde_json::from_str(&text).map_err(|e| LabError::Config(format!("manifest: {e}")))?;
        let hash = m.config.hash()?;
        if hash != m.config_hash {
            return Err(LabError::Config(format!(
                "manifest config hash {} does not match its config ({hash})",
                m.config_hash
            )));
        }
        Ok(m)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    /// Recomputes every artifact digest under `dir`.
    pub fn verify(&self, dir: &Path) -> Vec<DigestCheck> {
        self.artifacts
            .iter()
            .map(|a| DigestCheck {
                path: a.path.clone(),
                expected: a.sha256.clone(),
                actual: file_digest(&dir.join(&a.path), &a.masked_columns).ok(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::{KernelConfig, KernelFamilyName};

    fn manifest() -> RunManifest {
        let config = RunConfig::new(ExperimentKind::EntropyCheck, KernelConfig::new(KernelFamilyName::Zero));
        RunManifest {
            version: "0".into(),
            experiment: config.experiment,
            config_hash: config.hash().unwrap(),
            seeds: config.resolved_seeds(),
            config,
            sub_runs: 3,
            started: now_rfc3339(),
            finished: now_rfc3339(),
            artifacts: vec![ArtifactRecord {
                path: "a.csv".into(),
                sha256: masked_digest_of_csv(b"x,wallclock_ms\n1,2\n", &["wallclock_ms".into()]).unwrap(),
                bytes: 19,
                masked_columns: vec!["wallclock_ms".into()],
            }],
        }
    }

    #[test]
    fn write_load_verify() {
        let dir = tempfile::tempdir().unwrap();
        let m = manifest();
        let path = m.write(dir.path()).unwrap();
        assert_eq!(RunManifest::load(&path).unwrap(), m);
        assert!(!m.verify(dir.path())[0].matches());
        fs::write(dir.path().join("a.csv"), "x,wallclock_ms\n1,99\n").unwrap();
        assert!(m.verify(dir.path())[0].matches());
        fs::write(dir.path().join("a.csv"), "x,wallclock_ms\n2,2\n").unwrap();
        assert!(!m.verify(dir.path())[0].matches());
    }

    #[test]
    fn tampered_config_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = manifest();
        m.config.dt = 0.25;
        let path = m.write(dir.path()).unwrap();
        assert!(RunManifest::load(&path).unwrap_err().is_config_error());
    }

    #[test]
    fn timestamps_are_rfc3339() {
        let t = now_rfc3339();
        assert!(chrono::DateTime::parse_from_rfc3339(&t).is_ok(), "{t}");
    }
}
