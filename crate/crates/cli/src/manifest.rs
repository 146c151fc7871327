use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use dpts_core::Result;

pub const MANIFEST_VERSION: u32 = 1;

/// Fixed run-directory layout.
#[derive(Clone, Debug)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        for sub in ["checkpoints", "reports", "plots"] {
            std::fs::create_dir_all(root.join(sub))?;
        }
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }
    pub fn history(&self) -> PathBuf {
        self.root.join("history.csv")
    }
    pub fn checkpoint(&self, name: &str) -> PathBuf {
        self.root.join("checkpoints").join(name)
    }
    pub fn report(&self, name: &str) -> PathBuf {
        self.root.join("reports").join(name)
    }
    pub fn plot(&self, name: &str) -> PathBuf {
        self.root.join("plots").join(name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingSummary {
    pub reason: String,
    pub iterations: usize,
    pub best_iteration: Option<usize>,
    pub best_value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub dataset_hash: String,
    pub started: u64,
    pub finished: u64,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub accountant: Option<serde_json::Value>,
    pub stopping: Option<StoppingSummary>,
    pub metrics: BTreeMap<String, f64>,
    pub artifacts: BTreeMap<String, String>,
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn new(command: &str, config: &impl Serialize, seed: u64, dataset_hash: String) -> Result<Self> {
        Ok(Self {
            format_version: MANIFEST_VERSION,
            command: command.into(),
            config: serde_json::to_value(config)?,
            seed,
            dataset_hash,
            started: now(),
            finished: 0,
            epsilon: 0.0,
            delta: None,
            accountant: None,
            stopping: None,
            metrics: BTreeMap::new(),
            artifacts: BTreeMap::new(),
        })
    }

    pub fn artifact(&mut self, key: &str, path: &Path) {
        self.artifacts.insert(key.into(), path.display().to_string());
    }

    /// Stamp the end time and write atomically.
    pub fn finish(mut self, path: &Path) -> Result<Self> {
        self.finished = now();
        write_atomic(path, serde_json::to_string_pretty(&self)?.as_bytes())?;
        Ok(self)
    }
}

/// Write through a sibling temporary file and rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Minimal CSV table. Fields are written verbatim; callers pass plain
/// numbers and identifiers.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        let line: Vec<&str> = fields.iter().map(AsRef::as_ref).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.text.as_bytes())
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Shortest round-trip float formatting; non-finite values become `nan`,
/// `inf` or `-inf`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}
