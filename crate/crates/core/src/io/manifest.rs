//! Run manifest: configuration echo, version, seed, timing, exit status and
//! the list of files written. Written atomically at the end of a run.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::config::config_entries;
use crate::timeloop::SimulationConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitStatus {
    pub code: i32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub code_version: String,
    pub rng_seed: u64,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: Option<f64>,
    pub exit_status: Option<ExitStatus>,
    pub files: Vec<PathBuf>,
}

pub fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn start(command: &str, cfg: &SimulationConfig) -> Self {
        RunManifest {
            command: command.to_string(),
            config: config_entries(cfg)
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            rng_seed: cfg.rng_seed,
            started: now(),
            finished: None,
            exit_status: None,
            files: Vec::new(),
        }
    }

    pub fn finish(&mut self, code: i32, message: impl Into<String>) {
        self.finished = Some(now());
        self.exit_status = Some(ExitStatus {
            code,
            message: message.into(),
        });
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let json = serde_json::to_vec_pretty(self).map_err(|e| Error::Numerical(e.to_string()))?;
        write_atomic(&path, &json)?;
        Ok(path)
    }
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()
    };
    write().map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saves_and_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SimulationConfig::channel();
        let mut m = RunManifest::start("channel", &cfg);
        m.files.push(dir.path().join("timeseries.csv"));
        m.finish(0, "ok");
        let path = m.save(dir.path()).unwrap();
        let back: RunManifest = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.config["nx"], "180");
        assert!(!dir.path().join("manifest.json.tmp").exists());
    }

    #[test]
    fn io_errors_carry_the_path() {
        let err = write_atomic(Path::new("/nonexistent-dir/x/manifest.json"), b"{}").unwrap_err();
        match err {
            Error::Io { path, .. } => assert!(path.to_string_lossy().contains("nonexistent-dir")),
            other => panic!("{other:?}"),
        }
    }
}
