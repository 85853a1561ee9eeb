//! CSV tables and JSON sidecars.
//!
//! CSV bodies contain only experiment data, so identical runs give identical
//! bytes. Wall time and the timestamp live in the sidecar.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::conditions::BernsteinCertificate;
use crate::error::Result;

/// Write `rows` as a headed CSV file, creating parent directories.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV text for `rows`, as written by [`write_csv`].
pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Run metadata written next to every CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar<C> {
    pub command: String,
    pub config: C,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<BernsteinCertificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default)]
    pub fitted_constants: BTreeMap<String, f64>,
    #[serde(default)]
    pub outputs: Vec<PathBuf>,
    /// Set when the run failed after the config was accepted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_time_seconds: f64,
    pub timestamp_unix: u64,
    pub version: String,
}

impl<C> Sidecar<C> {
    pub fn new(command: &str, config: C) -> Self {
        Sidecar {
            command: command.to_string(),
            config,
            certificate: None,
            seed: None,
            samples: None,
            fitted_constants: BTreeMap::new(),
            outputs: Vec::new(),
            error: None,
            wall_time_seconds: 0.0,
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}
