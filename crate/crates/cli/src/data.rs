//! Measured-data ingestion: decay curves and tomogram tables.

use std::fs;
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};
use spps_core::engine::{CurveSource, DecayCurve, DecaySample};
use spps_core::tomography::ProjectionSet;
use spps_core::units::{convert, deg_to_rad, Unit};
use spps_core::wigner::ProjectionProfile;

use crate::error::{CliError, Result};

/// Raw bytes plus parsed content, so callers can fingerprint the input.
#[derive(Debug)]
pub struct Loaded<T> {
    pub value: T,
    pub bytes: Vec<u8>,
}

/// Reads `tau_us,gamma[,sigma_gamma]` rows.
pub fn read_decay_csv(path: &Path, phi: f64) -> Result<Loaded<DecayCurve>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let (header, rows) = records(path, &bytes)?;
    let with_sigma = match header.as_slice() {
        [a, b] if a == "tau_us" && b == "gamma" => false,
        [a, b, c] if a == "tau_us" && b == "gamma" && c == "sigma_gamma" => true,
        _ => {
            return Err(parse_error(
                path,
                1,
                format!(
                    "expected header `tau_us,gamma[,sigma_gamma]`, found `{}`",
                    header.join(",")
                ),
            ))
        }
    };
    let mut samples = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        let tau_us = number(path, *line, rec, 0, "tau_us")?;
        let gamma = number(path, *line, rec, 1, "gamma")?;
        let sigma_gamma = if with_sigma {
            let s = number(path, *line, rec, 2, "sigma_gamma")?;
            if s <= 0.0 {
                return Err(parse_error(
                    path,
                    *line,
                    format!("sigma_gamma must be > 0, got {s}"),
                ));
            }
            Some(s)
        } else {
            None
        };
        let tau = convert(tau_us, Unit::Microsecond, Unit::Second)?;
        if samples.last().is_some_and(|s: &DecaySample| tau <= s.tau) {
            return Err(parse_error(
                path,
                *line,
                "delays must be strictly increasing",
            ));
        }
        samples.push(DecaySample {
            tau,
            gamma,
            sigma_gamma,
        });
    }
    let value = DecayCurve::new(samples, phi, CurveSource::Ingested)?;
    Ok(Loaded { value, bytes })
}

/// Reads `theta_deg,s,density` rows grouped by angle; `s` is in units of
/// the projected width scale.
pub fn read_projections(path: &Path) -> Result<Loaded<ProjectionSet>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let (header, rows) = records(path, &bytes)?;
    if header != ["theta_deg", "s", "density"] {
        return Err(parse_error(
            path,
            1,
            format!(
                "expected header `theta_deg,s,density`, found `{}`",
                header.join(",")
            ),
        ));
    }
    struct Group {
        theta_deg: f64,
        first_line: u64,
        s: Vec<f64>,
        density: Vec<f64>,
    }
    let mut groups: Vec<Group> = Vec::new();
    for (line, rec) in &rows {
        let theta_deg = number(path, *line, rec, 0, "theta_deg")?;
        let s = number(path, *line, rec, 1, "s")?;
        let density = number(path, *line, rec, 2, "density")?;
        if !(0.0..180.0).contains(&theta_deg) {
            return Err(parse_error(
                path,
                *line,
                format!("theta_deg must lie in [0, 180), got {theta_deg}"),
            ));
        }
        match groups.last_mut() {
            Some(g) if g.theta_deg == theta_deg => {
                g.s.push(s);
                g.density.push(density);
            }
            _ => {
                if groups.iter().any(|g| g.theta_deg == theta_deg) {
                    return Err(parse_error(
                        path,
                        *line,
                        format!("rows for θ = {theta_deg}° are not contiguous"),
                    ));
                }
                groups.push(Group {
                    theta_deg,
                    first_line: *line,
                    s: vec![s],
                    density: vec![density],
                });
            }
        }
    }
    let profiles = groups
        .into_iter()
        .map(|g| {
            ProjectionProfile::new(deg_to_rad(g.theta_deg), g.s, g.density)
                .map_err(|e| parse_error(path, g.first_line, e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let value = ProjectionSet::new(profiles)?;
    Ok(Loaded { value, bytes })
}

type Rows = Vec<(u64, StringRecord)>;

/// Header fields and data records with their 1-based line numbers. Lines
/// starting with `#` are skipped.
fn records(path: &Path, bytes: &[u8]) -> Result<(Vec<String>, Rows)> {
    let mut reader = ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(Trim::All)
        .from_reader(bytes);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(parse_error(path, 1, "empty file: missing header line"));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec));
    }
    if rows.is_empty() {
        return Err(parse_error(path, 2, "no data rows"));
    }
    Ok((header, rows))
}

fn number(path: &Path, line: u64, rec: &StringRecord, i: usize, name: &str) -> Result<f64> {
    let field = rec.get(i).unwrap_or("");
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_error(
            path,
            line,
            format!("{name}: cannot parse `{field}` as a finite number"),
        )),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    parse_error(path, line, e.to_string())
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}
