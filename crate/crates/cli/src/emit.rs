//! File writers. Tables are CSV with a leading `#` provenance line; numbers
//! use Rust's shortest round-trip formatting so reruns are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::manifest::RunManifest;

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes `rows` under `columns` to `dir/name`.
pub fn write_table(
    dir: &Path,
    name: &str,
    manifest: &RunManifest,
    columns: &[&str],
    rows: &[Vec<f64>],
) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut out = format!("# {}\n", manifest.header()).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let io_err = |e: csv::Error| CliError::io(&path, e.into());
        w.write_record(columns).map_err(io_err)?;
        for row in rows {
            w.write_record(row.iter().map(|v| v.to_string()))
                .map_err(io_err)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
    }
    fs::write(&path, out).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Writes `key = value` lines to `dir/name`.
pub fn write_key_values(
    dir: &Path,
    name: &str,
    manifest: &RunManifest,
    entries: &[(String, String)],
) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut text = format!("# {}\n", manifest.header());
    for (k, v) in entries {
        text.push_str(&format!("{k} = {v}\n"));
    }
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}
