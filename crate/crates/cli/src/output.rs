//! Output files and the reproducibility manifest. All files of a run are
//! rendered in memory first and written by one writer at the end.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in rows {
            w.serialize(row)?;
        }
        self.files.push((name.into(), w.into_inner().context("flushing csv")?));
        Ok(())
    }

    pub fn ndjson<T: Serialize>(&mut self, name: &str, records: impl IntoIterator<Item = T>) -> Result<()> {
        let mut buf = Vec::new();
        for r in records {
            serde_json::to_writer(&mut buf, &r)?;
            buf.push(b'\n');
        }
        self.files.push((name.into(), buf));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut buf = serde_json::to_vec_pretty(value)?;
        buf.push(b'\n');
        self.files.push((name.into(), buf));
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }
}

#[derive(Debug, Serialize)]
struct FileEntry {
    file: String,
    bytes: usize,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a RunConfig,
    config_sha256: String,
    seed: u64,
    versions: Versions,
    outputs: Vec<FileEntry>,
    created_unix: u64,
}

#[derive(Debug, Serialize)]
struct Versions {
    randshear: &'static str,
    randshear_cli: &'static str,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the resolved configuration, excluding the output directory.
pub fn config_hash(cfg: &RunConfig) -> Result<String> {
    let mut c = cfg.clone();
    c.out_dir = None;
    Ok(sha256_hex(&serde_json::to_vec(&c)?))
}

/// Writes every file plus `manifest.json` into `dir`.
pub fn write_all(dir: &Path, command: &str, cfg: &RunConfig, outputs: Outputs) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    let mut entries = Vec::new();
    for (name, bytes) in outputs.files {
        let path = dir.join(&name);
        std::fs::write(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;
        entries.push(FileEntry {
            file: name,
            bytes: bytes.len(),
            sha256: sha256_hex(&bytes),
        });
        written.push(path);
    }
    let manifest = Manifest {
        command,
        config: cfg,
        config_sha256: config_hash(cfg)?,
        seed: cfg.seed(),
        versions: Versions {
            randshear: randshear::VERSION,
            randshear_cli: env!("CARGO_PKG_VERSION"),
        },
        outputs: entries,
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&manifest)?)
        .with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok(written)
}
