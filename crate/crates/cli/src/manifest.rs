use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::config::{Params, Subcommand};

pub const SEED_RULE: &str = "seed(master, tag, rep) = splitmix64(splitmix64(master ^ fnv1a64(tag)) ^ splitmix64(rep + 0x9E3779B97F4A7C15)); each replication draws from ChaCha8 seeded with it";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Incomplete,
    Complete,
    Failed,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sources {
    pub file: Option<PathBuf>,
    /// Keys as read from the file, before flags were applied.
    pub file_values: Option<Params>,
    pub flag_values: Params,
    /// Set when this run replays an earlier manifest.
    pub replay_of: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub tag: String,
    pub rep: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub status: Status,
    pub subcommand: Subcommand,
    pub engine_version: String,
    pub master_seed: u64,
    /// Resolved configuration; every default is explicit.
    pub config: Params,
    pub sources: Sources,
    pub seed_rule: String,
    pub outputs: Vec<PathBuf>,
    pub replications: Vec<Replication>,
    pub started_unix_s: f64,
    pub wall_clock_s: Option<f64>,
    pub threads: usize,
    #[serde(default)]
    pub summary: Option<serde_json::Value>,
    #[serde(default)]
    pub error: Option<String>,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    sibling(out, "manifest.json")
}

/// `<out>.<suffix>` next to the data file.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

pub fn now_unix() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

impl Manifest {
    /// Writes through a temporary file so a reader never sees half a
    /// manifest.
    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let tmp = sibling(path, "tmp");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&tmp, text + "\n").with_context(|| format!("writing {}", tmp.display()))?;
        std::fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn read(path: &Path) -> anyhow::Result<Manifest> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}
