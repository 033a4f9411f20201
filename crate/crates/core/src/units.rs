//! Physical constants, guide geometry, scenario parameters and the small set
//! of unit conversions needed at IO boundaries. Everything inside the crate
//! is SI.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_positive, Error, Result};
use crate::wigner::CorrelatedGaussianState;

/// Reduced Planck constant (CODATA 2018, exact in the revised SI).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Mass of a ⁸⁷Rb atom in kg.
pub const RB87_MASS: f64 = 1.443_16e-25;
/// Rb D2 line vacuum wavelength in m.
pub const RB87_D2_WAVELENGTH: f64 = 780.24e-9;

/// Fundamental constants for one atomic species and probe wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    hbar: f64,
    atom_mass: f64,
    wavelength: f64,
    wavenumber: f64,
}

impl Constants {
    pub fn new(hbar: f64, atom_mass: f64, wavelength: f64) -> Result<Self> {
        ensure_positive("hbar", hbar)?;
        ensure_positive("atom_mass", atom_mass)?;
        ensure_positive("wavelength", wavelength)?;
        Ok(Self {
            hbar,
            atom_mass,
            wavelength,
            wavenumber: 2.0 * PI / wavelength,
        })
    }

    /// ⁸⁷Rb probed on the D2 line.
    pub fn rb87() -> Self {
        Self::new(HBAR, RB87_MASS, RB87_D2_WAVELENGTH).expect("built-in constants are valid")
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn atom_mass(&self) -> f64 {
        self.atom_mass
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Optical wavenumber k = 2π/λ.
    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    /// Velocity ħq/m imparted by a recoil of wavevector `q`.
    pub fn recoil_velocity(&self, q: f64) -> f64 {
        self.hbar * q / self.atom_mass
    }
}

/// Circular waveguide: ring radius, mean orbital angular frequency of the
/// beam, and transverse trap frequency (all angular frequencies in rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuideConfig {
    radius: f64,
    orbital_freq: f64,
    transverse_freq: f64,
}

impl GuideConfig {
    pub fn new(radius: f64, orbital_freq: f64, transverse_freq: f64) -> Result<Self> {
        ensure_positive("radius", radius)?;
        ensure_positive("orbital_freq", orbital_freq)?;
        ensure_positive("transverse_freq", transverse_freq)?;
        Ok(Self {
            radius,
            orbital_freq,
            transverse_freq,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Ω in rad/s.
    pub fn orbital_freq(&self) -> f64 {
        self.orbital_freq
    }

    /// ω_T in rad/s.
    pub fn transverse_freq(&self) -> f64 {
        self.transverse_freq
    }

    /// Transverse ground-state rms width σ_T = sqrt(ħ / 2mω_T).
    pub fn transverse_width(&self, constants: &Constants) -> f64 {
        (constants.hbar() / (2.0 * constants.atom_mass() * self.transverse_freq)).sqrt()
    }

    /// Mean azimuthal speed ΩR.
    pub fn orbital_speed(&self) -> f64 {
        self.orbital_freq * self.radius
    }
}

/// Beam angular position at the pump pulse and the pump-probe delays to scan.
#[derive(Debug, Clone, PartialEq)]
pub struct PulsePair {
    phi: f64,
    tau_grid: Vec<f64>,
}

impl PulsePair {
    pub fn new(phi: f64, tau_grid: Vec<f64>) -> Result<Self> {
        if !phi.is_finite() || phi.abs() >= PI {
            return Err(Error::invalid("phi", format!("|φ| must be < π, got {phi}")));
        }
        validate_tau_grid(&tau_grid)?;
        Ok(Self { phi, tau_grid })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn tau_grid(&self) -> &[f64] {
        &self.tau_grid
    }
}

pub(crate) fn validate_tau_grid(taus: &[f64]) -> Result<()> {
    if taus.is_empty() {
        return Err(Error::invalid("tau_grid", "empty"));
    }
    if taus.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::invalid("tau_grid", "delays must be finite and ≥ 0"));
    }
    if taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "tau_grid",
            "delays must be strictly increasing",
        ));
    }
    Ok(())
}

/// Complete description of one pump-probe experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub constants: Constants,
    pub guide: GuideConfig,
    /// Beam state at the moment of the pump pulse.
    pub beam: CorrelatedGaussianState,
    pub pulse_pair: PulsePair,
}

impl ScenarioConfig {
    pub fn new(
        constants: Constants,
        guide: GuideConfig,
        beam: CorrelatedGaussianState,
        pulse_pair: PulsePair,
    ) -> Self {
        Self {
            constants,
            guide,
            beam,
            pulse_pair,
        }
    }

    /// Same scenario with a different beam state.
    pub fn with_beam(&self, beam: CorrelatedGaussianState) -> Self {
        Self {
            beam,
            ..self.clone()
        }
    }

    pub fn with_guide(&self, guide: GuideConfig) -> Self {
        Self {
            guide,
            ..self.clone()
        }
    }
}

/// The half-revolution configuration of the guided ⁸⁷Rb beam:
/// R = 1.25 mm, Ω = 2π·8.4 s⁻¹, ω_T = 2π·85 s⁻¹, σ_x = 120 µm,
/// σ_p = m·1.8 mm/s, η = 1 − 4.9×10⁻⁴, N = 3×10⁵.
///
/// The pulse pair sits at the critical angle 2·atan(σ_p / mΩσ_x) with 61
/// delays spanning 0–3 ms.
pub fn guided_rb87_scenario() -> ScenarioConfig {
    let constants = Constants::rb87();
    let guide = GuideConfig::new(1.25e-3, 2.0 * PI * 8.4, 2.0 * PI * 85.0)
        .expect("built-in guide is valid");
    let sigma_x = 120e-6;
    let sigma_p = constants.atom_mass() * 1.8e-3;
    let beam = CorrelatedGaussianState::with_one_minus_eta(sigma_x, sigma_p, 4.9e-4, 3.0e5)
        .expect("built-in beam is valid");
    let phi = 2.0 * (sigma_p / (constants.atom_mass() * guide.orbital_freq() * sigma_x)).atan();
    let tau_grid = (0..=60).map(|i| i as f64 * 50e-6).collect();
    let pulse_pair = PulsePair::new(phi, tau_grid).expect("built-in pulse pair is valid");
    ScenarioConfig::new(constants, guide, beam, pulse_pair)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Time,
    Angle,
    Momentum,
}

/// Units accepted at IO boundaries.
///
/// `MassVelocity` expresses a momentum as a velocity in m/s times the
/// carried atomic mass in kg, which is how beam momentum widths are quoted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Unit {
    Meter,
    Millimeter,
    Micrometer,
    Nanometer,
    Second,
    Millisecond,
    Microsecond,
    Radian,
    Degree,
    KilogramMeterPerSecond,
    MassMillimeterPerSecond { mass: f64 },
    MassMeterPerSecond { mass: f64 },
}

impl Unit {
    pub fn dimension(&self) -> Dimension {
        use Unit::*;
        match self {
            Meter | Millimeter | Micrometer | Nanometer => Dimension::Length,
            Second | Millisecond | Microsecond => Dimension::Time,
            Radian | Degree => Dimension::Angle,
            KilogramMeterPerSecond | MassMillimeterPerSecond { .. } | MassMeterPerSecond { .. } => {
                Dimension::Momentum
            }
        }
    }

    /// Multiplier taking a value in this unit to SI.
    fn to_si(self) -> f64 {
        use Unit::*;
        match self {
            Meter | Second | Radian | KilogramMeterPerSecond => 1.0,
            Millimeter | Millisecond => 1e-3,
            Micrometer | Microsecond => 1e-6,
            Nanometer => 1e-9,
            Degree => PI / 180.0,
            MassMillimeterPerSecond { mass } => mass * 1e-3,
            MassMeterPerSecond { mass } => mass,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Unit::*;
        match self {
            Meter => write!(f, "m"),
            Millimeter => write!(f, "mm"),
            Micrometer => write!(f, "um"),
            Nanometer => write!(f, "nm"),
            Second => write!(f, "s"),
            Millisecond => write!(f, "ms"),
            Microsecond => write!(f, "us"),
            Radian => write!(f, "rad"),
            Degree => write!(f, "deg"),
            KilogramMeterPerSecond => write!(f, "kg*m/s"),
            MassMillimeterPerSecond { mass } => write!(f, "{mass:e} kg*mm/s"),
            MassMeterPerSecond { mass } => write!(f, "{mass:e} kg*m/s (per unit mass)"),
        }
    }
}

impl FromStr for Unit {
    type Err = Error;

    /// Parses the mass-free unit symbols. Mass-scaled momentum units must be
    /// constructed directly since they carry the atomic mass.
    fn from_str(s: &str) -> Result<Self> {
        use Unit::*;
        Ok(match s.trim() {
            "m" => Meter,
            "mm" => Millimeter,
            "um" | "µm" | "μm" => Micrometer,
            "nm" => Nanometer,
            "s" => Second,
            "ms" => Millisecond,
            "us" | "µs" | "μs" => Microsecond,
            "rad" => Radian,
            "deg" | "°" => Degree,
            "kg*m/s" | "kg m/s" | "kg·m/s" => KilogramMeterPerSecond,
            other => {
                return Err(Error::invalid(
                    "unit",
                    format!("unrecognised unit '{other}'"),
                ))
            }
        })
    }
}

/// Converts `value` between two units of the same dimension.
pub fn convert(value: f64, from: Unit, to: Unit) -> Result<f64> {
    if from.dimension() != to.dimension() {
        return Err(Error::IncompatibleUnits {
            from: from.to_string(),
            to: to.to_string(),
        });
    }
    Ok(value * from.to_si() / to.to_si())
}

pub fn deg_to_rad(deg: f64) -> f64 {
    deg * PI / 180.0
}

pub fn rad_to_deg(rad: f64) -> f64 {
    rad * 180.0 / PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn wavenumber_matches_wavelength() {
        let c = Constants::rb87();
        assert_relative_eq!(
            c.wavenumber() * c.wavelength(),
            2.0 * PI,
            max_relative = 1e-12
        );
    }

    #[test]
    fn rejects_non_positive_constants() {
        assert!(Constants::new(0.0, 1.0, 1.0).is_err());
        assert!(Constants::new(HBAR, -1.0, 1.0).is_err());
        assert!(Constants::new(HBAR, 1.0, f64::NAN).is_err());
        assert!(GuideConfig::new(1e-3, 0.0, 1.0).is_err());
    }

    #[test]
    fn guided_scenario_values() {
        let cfg = guided_rb87_scenario();
        let c = &cfg.constants;
        let area_max = cfg.beam.sigma_x() * cfg.beam.sigma_p() / c.hbar();
        assert!((area_max - 296.0).abs() < 1.0, "σxσp/ħ = {area_max}");
        // within 10% of the quoted 310ħ
        assert!((area_max - 310.0).abs() / 310.0 < 0.10);

        let sigma_t = cfg.guide.transverse_width(c);
        assert!((sigma_t - 0.83e-6).abs() < 0.01e-6, "σ_T = {sigma_t}");

        let v_recoil = c.recoil_velocity(2.0 * c.wavenumber());
        assert!((v_recoil - 11.8e-3).abs() < 0.05e-3, "2ħk/m = {v_recoil}");

        assert_eq!(c.atom_mass(), 1.44316e-25);
        assert_eq!(cfg.beam.atom_number(), 3.0e5);
        assert_relative_eq!(
            cfg.beam.sigma_p() / c.atom_mass(),
            1.8e-3,
            max_relative = 1e-15
        );
        assert_relative_eq!(cfg.beam.one_minus_eta(), 4.9e-4, max_relative = 1e-12);
    }

    #[test]
    fn guided_scenario_is_deterministic() {
        let a = guided_rb87_scenario();
        let b = guided_rb87_scenario();
        assert_eq!(a, b);
        assert_eq!(a.pulse_pair.phi().to_bits(), b.pulse_pair.phi().to_bits());
    }

    #[test]
    fn conversion_examples() {
        assert_relative_eq!(
            convert(1.25, Unit::Millimeter, Unit::Meter).unwrap(),
            0.00125,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            convert(PI / 4.0, Unit::Radian, Unit::Degree).unwrap(),
            45.0,
            max_relative = 1e-15
        );
        let p = convert(
            1.8,
            Unit::MassMillimeterPerSecond { mass: RB87_MASS },
            Unit::KilogramMeterPerSecond,
        )
        .unwrap();
        assert_relative_eq!(p, 1.8e-3 * 1.44316e-25, max_relative = 1e-14);
        assert_relative_eq!(p, 2.598e-28, max_relative = 1e-3);
    }

    #[test]
    fn incompatible_units_rejected() {
        let err = convert(1.0, Unit::Meter, Unit::Second).unwrap_err();
        assert!(matches!(err, Error::IncompatibleUnits { .. }));
        assert!(err.to_string().contains("m"));
    }

    #[test]
    fn parse_units() {
        assert_eq!("µs".parse::<Unit>().unwrap(), Unit::Microsecond);
        assert_eq!("deg".parse::<Unit>().unwrap(), Unit::Degree);
        assert!("furlong".parse::<Unit>().is_err());
    }

    #[test]
    fn pulse_pair_validation() {
        assert!(PulsePair::new(PI, vec![0.0]).is_err());
        assert!(PulsePair::new(0.1, vec![0.0, 0.0]).is_err());
        assert!(PulsePair::new(0.1, vec![-1e-6, 0.0]).is_err());
        assert!(PulsePair::new(0.1, vec![0.0, 1e-6]).is_ok());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn unit_pairs() -> impl Strategy<Value = (Unit, Unit)> {
            let m = RB87_MASS;
            let groups: Vec<Vec<Unit>> = vec![
                vec![
                    Unit::Meter,
                    Unit::Millimeter,
                    Unit::Micrometer,
                    Unit::Nanometer,
                ],
                vec![Unit::Second, Unit::Millisecond, Unit::Microsecond],
                vec![Unit::Radian, Unit::Degree],
                vec![
                    Unit::KilogramMeterPerSecond,
                    Unit::MassMillimeterPerSecond { mass: m },
                    Unit::MassMeterPerSecond { mass: m },
                ],
            ];
            let pairs: Vec<(Unit, Unit)> = groups
                .iter()
                .flat_map(|g| g.iter().flat_map(move |a| g.iter().map(move |b| (*a, *b))))
                .collect();
            proptest::sample::select(pairs)
        }

        proptest! {
            #[test]
            fn round_trip_identity((a, b) in unit_pairs(), v in -1e6f64..1e6) {
                let there = convert(v, a, b).unwrap();
                let back = convert(there, b, a).unwrap();
                prop_assert!((back - v).abs() <= 1e-14 * v.abs());
            }
        }
    }
}
