//! Run provenance. Every emitted file starts with a comment line naming the
//! tool version and a digest of everything that determines its content.

use std::fmt;
use std::path::PathBuf;

use chrono::{DateTime, SecondsFormat, Utc};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SimulateDecay,
    SweepAngle,
    Analyze,
    Reconstruct,
    Propagate,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::SimulateDecay => "simulate-decay",
            Command::SweepAngle => "sweep-angle",
            Command::Analyze => "analyze",
            Command::Reconstruct => "reconstruct",
            Command::Propagate => "propagate",
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: Command,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub svg: bool,
    pub created: DateTime<Utc>,
    pub tool_version: &'static str,
    config_fingerprint: String,
    /// Resolved parameters and input-file digests, in insertion order.
    entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(
        command: Command,
        config_path: Option<PathBuf>,
        config_fingerprint: &str,
        output_dir: PathBuf,
        svg: bool,
    ) -> Self {
        Self {
            command,
            config_path,
            output_dir,
            svg,
            created: Utc::now(),
            tool_version: TOOL_VERSION,
            config_fingerprint: config_fingerprint.to_string(),
            entries: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl fmt::Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    /// Records an input file by the SHA-256 of its bytes.
    pub fn input(&mut self, key: &str, bytes: &[u8]) -> &mut Self {
        let digest = hex::encode(Sha256::digest(bytes));
        self.param(key, digest)
    }

    /// Digest over version, command, scenario and parameters. The creation
    /// time and output location do not enter, so reruns share a digest.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("version={}\n", self.tool_version));
        h.update(format!("command={}\n", self.command));
        h.update(format!("config={}\n", self.config_fingerprint));
        h.update(format!("svg={}\n", self.svg));
        for (k, v) in &self.entries {
            h.update(format!("{k}={v}\n"));
        }
        hex::encode(h.finalize())
    }

    /// `spps <version> manifest=<digest> created=<rfc3339>`, without the
    /// comment marker.
    pub fn header(&self) -> String {
        format!(
            "spps {} {} manifest={} created={}",
            self.tool_version,
            self.command,
            self.digest(),
            self.created.to_rfc3339_opts(SecondsFormat::Secs, true)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> RunManifest {
        let mut m = RunManifest::new(Command::Propagate, None, "builtin", "out".into(), false);
        m.param("t_max_s", 0.1).param("points", 50);
        m
    }

    #[test]
    fn digest_ignores_time_and_output_dir() {
        let a = manifest();
        let mut b = manifest();
        b.output_dir = "elsewhere".into();
        b.created = DateTime::from_timestamp(0, 0).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn digest_tracks_parameters() {
        let a = manifest();
        let mut b = manifest();
        b.param("extra", 1);
        assert_ne!(a.digest(), b.digest());
        assert!(a
            .header()
            .starts_with(&format!("spps {TOOL_VERSION} propagate manifest=")));
    }
}
