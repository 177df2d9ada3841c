use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Round-trippable rendering: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_else(|| "NA".to_string())
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| quote(c)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// RFC 4180 quoting for cells holding commas, quotes or newlines.
fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// Sidecar written next to every output file as `<out>.manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Command line after the program name; replaying it reproduces the run.
    pub args: Vec<String>,
    pub parameters: serde_json::Value,
    pub master_seed: Option<u64>,
    pub replicas: Option<u64>,
    pub output_schema: String,
    pub summary: serde_json::Value,
    pub version: String,
    /// Excluded from reproducibility comparisons.
    pub wall_time_secs: f64,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes `body` to `out` (or stdout) and the manifest next to it.
pub fn emit(out: Option<&Path>, body: &str, manifest: &RunManifest) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, body)?;
            let mut json = serde_json::to_string_pretty(manifest)?;
            json.push('\n');
            fs::write(manifest_path(path), json)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(body.as_bytes())?;
            lock.flush()?;
        }
    }
    Ok(())
}
