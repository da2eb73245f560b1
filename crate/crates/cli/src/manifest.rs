//! Run manifests and the files written next to them.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::jobs::Job;
use crate::table::Table;

pub const TOOL: &str = "subshot";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub job: Job,
    /// Seconds since the Unix epoch. Not part of the digest.
    pub timestamp: u64,
}

impl Manifest {
    pub fn new(job: Job) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: job.kind().into(),
            seed: job.seed(),
            job,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }

    /// SHA-256 of the key-sorted JSON of everything except the timestamp.
    pub fn digest(&self) -> String {
        let mut value = serde_json::to_value(self).expect("manifest serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("timestamp");
        }
        let canonical = serde_json::to_vec(&value).expect("value serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Serialize)]
struct Mirror<'a> {
    manifest_sha256: &'a str,
    #[serde(flatten)]
    table: &'a Table,
}

/// Writes `<name>.csv` and `<name>.json` per table plus `manifest.json`; returns the CSV paths.
pub fn write_outputs(
    dir: &Path,
    manifest: &Manifest,
    tables: &[Table],
) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let digest = manifest.digest();
    let header = [
        format!(
            "{} {} {}",
            manifest.tool, manifest.version, manifest.command
        ),
        format!("manifest sha256 {digest}"),
    ];
    let mut written = Vec::new();
    for t in tables {
        let csv = dir.join(format!("{}.csv", t.name));
        fs::write(&csv, t.to_csv(&header))?;
        let mirror = Mirror {
            manifest_sha256: &digest,
            table: t,
        };
        fs::write(
            dir.join(format!("{}.json", t.name)),
            serde_json::to_string_pretty(&mirror)? + "\n",
        )?;
        written.push(csv);
    }
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(manifest)? + "\n",
    )?;
    Ok(written)
}
