//! Scenario files: flat `key = value` text with the unit carried in each key
//! name. Frequencies are ordinary frequencies (Ω/2π) in Hz.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};
use spps_core::kinematics::critical_angle;
use spps_core::units::{
    convert, deg_to_rad, guided_rb87_scenario, Constants, GuideConfig, PulsePair, ScenarioConfig,
    Unit, HBAR,
};
use spps_core::wigner::CorrelatedGaussianState;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub mass_kg: f64,
    pub wavelength_nm: f64,
    pub radius_mm: f64,
    pub omega_orbit_hz: f64,
    pub omega_transverse_hz: f64,
    pub sigma_x_um: f64,
    pub sigma_p_mm_per_s: f64,
    pub eta: f64,
    pub atom_number: f64,
    /// Default beam angle for commands that take `--phi`.
    #[serde(default)]
    pub phi_deg: Option<f64>,
    #[serde(default)]
    pub mean_x_um: Option<f64>,
    #[serde(default)]
    pub mean_v_mm_per_s: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })
    }

    pub fn to_scenario(&self) -> spps_core::Result<ScenarioConfig> {
        let wavelength = convert(self.wavelength_nm, Unit::Nanometer, Unit::Meter)?;
        let constants = Constants::new(HBAR, self.mass_kg, wavelength)?;
        let guide = GuideConfig::new(
            convert(self.radius_mm, Unit::Millimeter, Unit::Meter)?,
            2.0 * PI * self.omega_orbit_hz,
            2.0 * PI * self.omega_transverse_hz,
        )?;
        let momentum = Unit::MassMillimeterPerSecond { mass: self.mass_kg };
        let beam = CorrelatedGaussianState::new_capped(
            convert(self.sigma_x_um, Unit::Micrometer, Unit::Meter)?,
            convert(
                self.sigma_p_mm_per_s,
                momentum,
                Unit::KilogramMeterPerSecond,
            )?,
            self.eta,
            self.atom_number,
        )?
        .with_mean(
            convert(self.mean_x_um.unwrap_or(0.0), Unit::Micrometer, Unit::Meter)?,
            convert(
                self.mean_v_mm_per_s.unwrap_or(0.0),
                momentum,
                Unit::KilogramMeterPerSecond,
            )?,
        )?;
        let placeholder = guided_rb87_scenario();
        let mut cfg = ScenarioConfig::new(constants, guide, beam, placeholder.pulse_pair.clone());
        let phi = match self.phi_deg {
            Some(deg) => deg_to_rad(deg),
            None => critical_angle(&cfg),
        };
        cfg.pulse_pair = PulsePair::new(phi, placeholder.pulse_pair.tau_grid().to_vec())?;
        Ok(cfg)
    }
}

/// Where the scenario came from, and a fingerprint of its content.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub config: ScenarioConfig,
    pub path: Option<PathBuf>,
    /// SHA-256 of the file bytes, or `builtin`.
    pub fingerprint: String,
}

/// Reads `path`, or falls back to the built-in guided-beam scenario.
pub fn load(path: Option<&Path>) -> Result<LoadedScenario> {
    let Some(path) = path else {
        return Ok(LoadedScenario {
            config: guided_rb87_scenario(),
            path: None,
            fingerprint: "builtin".into(),
        });
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file = ConfigFile::parse(&text, path)?;
    let config = file.to_scenario().map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(LoadedScenario {
        config,
        path: Some(path.to_path_buf()),
        fingerprint: hex::encode(Sha256::digest(text.as_bytes())),
    })
}
