//! Artifact assembly and persistence: CSV/JSON bodies built in memory,
//! written with LF endings, checksummed into an atomically-written run
//! manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn csv(name: &str, header: &str, rows: &[String]) -> Self {
        let mut body = String::with_capacity(rows.len() * 32 + header.len() + 1);
        body.push_str(header);
        body.push('\n');
        for row in rows {
            body.push_str(row);
            body.push('\n');
        }
        Artifact {
            name: name.to_string(),
            bytes: body.into_bytes(),
        }
    }

    pub fn json<T: Serialize>(name: &str, value: &T) -> Result<Self> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(Artifact {
            name: name.to_string(),
            bytes,
        })
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[derive(Debug, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: usize,
    pub fnv1a64: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub wall_ms: u128,
    pub config: &'a RunConfig,
    pub outputs: Vec<ManifestEntry>,
    pub failed_points: Vec<String>,
}

/// Write all artifacts, then the manifest via a temp file and rename so a
/// partial run never leaves a valid-looking manifest behind.
pub fn persist(
    config: &RunConfig,
    artifacts: &[Artifact],
    failed_points: Vec<String>,
    elapsed: Duration,
) -> Result<PathBuf> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    // the effective configuration, replayable and diffable
    let config_artifact = Artifact {
        name: "run_config.txt".into(),
        bytes: config.to_flat_text().into_bytes(),
    };
    let mut outputs = Vec::new();
    for artifact in artifacts.iter().chain(std::iter::once(&config_artifact)) {
        let path = dir.join(&artifact.name);
        fs::write(&path, &artifact.bytes).with_context(|| format!("writing {}", path.display()))?;
        outputs.push(ManifestEntry {
            path: artifact.name.clone(),
            bytes: artifact.bytes.len(),
            fnv1a64: format!("{:016x}", fnv1a64(&artifact.bytes)),
        });
    }
    let manifest = RunManifest {
        command: &config.command,
        version: env!("CARGO_PKG_VERSION"),
        wall_ms: elapsed.as_millis(),
        config,
        outputs,
        failed_points,
    };
    let manifest_path = dir.join("run_manifest.json");
    let tmp_path = dir.join("run_manifest.json.tmp");
    let mut body = serde_json::to_vec_pretty(&manifest)?;
    body.push(b'\n');
    fs::write(&tmp_path, &body)?;
    fs::rename(&tmp_path, &manifest_path)?;
    Ok(manifest_path)
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}
