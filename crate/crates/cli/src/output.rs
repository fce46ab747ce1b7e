//! JSON summary and CSV detail written next to each other in the output directory.

use crate::error::CliError;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Result of one subcommand before it is written to disk.
pub struct Artifact {
    pub command: &'static str,
    pub seed: Option<u64>,
    /// Fully resolved configuration (file contents with overrides applied).
    pub config: Value,
    pub result: Value,
    pub csv_header: Vec<&'static str>,
    pub csv_rows: Vec<Vec<String>>,
    /// Whether every check in the run held; false maps to exit code 2.
    pub passed: bool,
}

pub fn config_hash(config: &Value) -> String {
    // serde_json::Value keeps object keys sorted, so the text is canonical.
    let digest = Sha256::digest(config.to_string().as_bytes());
    let mut hex = String::with_capacity(64);
    for b in digest {
        write!(hex, "{b:02x}").expect("writing to a String cannot fail");
    }
    hex
}

/// Writes `<command>.json` and `<command>.csv`; returns the JSON path.
pub fn write(artifact: &Artifact, out_dir: &Path, wallclock: Option<f64>) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(out_dir)?;
    let json_path = out_dir.join(format!("{}.json", artifact.command));
    let csv_path = out_dir.join(format!("{}.csv", artifact.command));
    let mut summary = json!({
        "command": artifact.command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": artifact.seed,
        "config": artifact.config,
        "config_hash": config_hash(&artifact.config),
        "status": if artifact.passed { "ok" } else { "check_failed" },
        "result": artifact.result,
        "detail_csv": csv_path.file_name().and_then(|s| s.to_str()),
    });
    if let Some(secs) = wallclock {
        summary["wallclock_seconds"] = json!(secs);
    }
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    std::fs::write(&json_path, text)?;

    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(&artifact.csv_header)?;
    for row in &artifact.csv_rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(json_path)
}

/// Shortest round-trip decimal text, so CSV values parse back bit-exactly.
pub fn num(x: f64) -> String {
    if x == 0.0 || (1e-4..1e15).contains(&x.abs()) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
