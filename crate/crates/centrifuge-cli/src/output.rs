//! Output files: atomic writes, CSV/NDJSON helpers and the hashed manifest.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Collects every file written during a run, with content hashes.
#[derive(Debug, Default)]
pub struct OutputSink {
    root: PathBuf,
    files: Vec<FileRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl OutputSink {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
        Ok(OutputSink {
            root,
            files: Vec::new(),
        })
    }

    /// Write atomically (temp file + rename) and record the hash.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("tmp~");
        {
            let mut f =
                fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path).with_context(|| format!("renaming into {}", path.display()))?;
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        self.files.push(FileRecord {
            path: rel.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(hasher.finalize()),
        });
        Ok(())
    }

    pub fn records(&self) -> &[FileRecord] {
        &self.files
    }

    /// Write the manifest itself (not self-listed).
    pub fn write_manifest(&self, manifest: &impl Serialize) -> Result<()> {
        let text = serde_json::to_string_pretty(manifest)?;
        let path = self.root.join("manifest.json");
        let tmp = path.with_extension("tmp~");
        fs::write(&tmp, text.as_bytes())?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }
}

/// CSV of a final distribution: `l,P` rows.
pub fn distribution_csv(dist: &[f64]) -> String {
    let mut out = String::from("l,P\n");
    for (l, p) in dist.iter().enumerate() {
        out.push_str(&format!("{l},{p:e}\n"));
    }
    out
}

/// Long-format trajectory CSV: `tau,l,P` rows.
pub fn trajectory_csv(times: &[f64], populations: &[Vec<f64>]) -> String {
    let mut out = String::from("tau,l,P\n");
    for (t, pops) in times.iter().zip(populations) {
        for (l, p) in pops.iter().enumerate() {
            out.push_str(&format!("{t:e},{l},{p:e}\n"));
        }
    }
    out
}

/// One NDJSON line per serializable record.
pub fn ndjson<T: Serialize>(records: impl IntoIterator<Item = T>) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&r)?);
        out.push('\n');
    }
    Ok(out)
}
