use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Everything needed to reproduce a run. Thread count, report path and
/// timing sidecar are deliberately absent so that replays under a different
/// thread count produce byte-identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Canonical argument vector, without the program name.
    pub argv: Vec<String>,
    pub params: Value,
    pub seed: u64,
    pub budget_cells: u128,
    pub version: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

/// Options stripped from the canonical argv because they do not affect results.
const VOLATILE: [&str; 3] = ["--threads", "--report", "--timing"];

pub fn canonical_argv(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if VOLATILE.contains(&a.as_str()) {
            skip = true;
            continue;
        }
        if VOLATILE.iter().any(|v| a.starts_with(&format!("{v}="))) {
            continue;
        }
        out.push(a.clone());
    }
    out
}

#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub manifest: &'a RunManifest,
    pub result: &'a T,
}

pub fn write_report<T: Serialize>(path: &Path, manifest: &RunManifest, result: &T) -> std::io::Result<()> {
    let env = Envelope { manifest, result };
    let mut text = serde_json::to_string_pretty(&env).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    // accept either a bare manifest or a full report envelope
    let m = value.get("manifest").cloned().unwrap_or(value);
    serde_json::from_value(m).map_err(|e| format!("{}: not a run manifest: {e}", path.display()))
}
