use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};
use tonaleval::signal::FeatureConfig;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance record written once per output directory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub config: FeatureConfig,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub n_errors: usize,
    pub timestamp: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// `SOURCE_DATE_EPOCH` when set, so reruns can be byte-identical.
fn timestamp() -> String {
    let at = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| DateTime::<Utc>::from_timestamp(secs, 0))
        .unwrap_or_else(Utc::now);
    at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub struct ManifestBuilder {
    command: String,
    seed: Option<u64>,
    config: FeatureConfig,
    inputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn new(command: &str, seed: Option<u64>, config: &FeatureConfig) -> Self {
        ManifestBuilder {
            command: command.into(),
            seed,
            config: config.clone(),
            inputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    /// Digests every regular file under `out_dir` (except the manifest) and
    /// writes `manifest.json` there.
    pub fn write(mut self, out_dir: &Path, n_errors: usize) -> Result<()> {
        self.inputs.sort();
        self.inputs.dedup();
        let inputs = self
            .inputs
            .iter()
            .map(|p| {
                Ok(FileDigest {
                    path: p.display().to_string(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut files = Vec::new();
        collect_files(out_dir, out_dir, &mut files)?;
        files.sort();
        let outputs = files
            .iter()
            .filter(|rel| rel.as_str() != MANIFEST_NAME)
            .map(|rel| {
                Ok(FileDigest {
                    path: rel.clone(),
                    sha256: sha256_file(&out_dir.join(rel))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let m = RunManifest {
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed: self.seed,
            config: self.config,
            inputs,
            outputs,
            n_errors,
            timestamp: timestamp(),
        };
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        std::fs::write(out_dir.join(MANIFEST_NAME), text).context("writing manifest")?;
        Ok(())
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).expect("walked from root");
            out.push(
                rel.components()
                    .map(|c| c.as_os_str().to_string_lossy())
                    .collect::<Vec<_>>()
                    .join("/"),
            );
        }
    }
    Ok(())
}
