//! Recoil geometry of pump and probe pulses on a beam orbiting a ring guide,
//! ballistic evolution of the beam moments, and the center-of-mass readout
//! of the scattered fraction.
//!
//! The light propagates tangentially to the ring at the reference point; a
//! beam at angular position φ sees it incident at angle φ to its long axis
//! while superradiant emission leaves along that axis. The longitudinal pump
//! recoil is therefore q₁ = k(1 + cos φ). During the delay τ the beam turns
//! by Ωτ, which in the co-rotating frame changes the probe recoil by
//! Δq ≃ kΩτ(−sin φ x̂ + cos φ r̂) to first order in Ωτ.

use std::f64::consts::PI;

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::units::{Constants, ScenarioConfig};
use crate::wigner::CorrelatedGaussianState;

/// Largest Ωτ for which the first-order rotation expansion is used.
pub const SMALL_ROTATION_LIMIT: f64 = 0.3;

/// Scattered fractions above this are treated as inconsistent input.
pub const FRACTION_INCONSISTENT: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoilKinematics {
    /// Beam angular position relative to tangential incidence (rad).
    pub phi: f64,
    /// Pump-probe delay (s).
    pub tau: f64,
    /// Longitudinal pump recoil wavevector (1/m).
    pub q1: f64,
    /// Longitudinal probe-minus-pump mismatch Δq (1/m).
    pub dq_long: f64,
    /// Radial mismatch (1/m).
    pub dq_trans: f64,
    /// Phase-space projection angle with tan θ = −(Δq m/q₁τ)(σ_x/σ_p), in
    /// (−π/2, π/2).
    pub theta: f64,
    /// Atomic mass converting momentum to the probe phase q₁τp/m (kg).
    pub mass: f64,
}

impl RecoilKinematics {
    /// Longitudinal probe recoil q₂ = q₁ + Δq.
    pub fn q2(&self) -> f64 {
        self.q1 + self.dq_long
    }

    /// The tomogram angle (see [`crate::wigner`]) whose profile the probe
    /// reads out. Pump-probe phase matching samples the projection onto the
    /// direction (Δq σ_x, q₁τσ_p/m) in (x̃, p̃), which is angle −θ modulo π.
    pub fn tomographic_angle(&self) -> f64 {
        (-self.theta).rem_euclid(PI)
    }

    /// Phase wavevector conjugate to x̃ = x/σ_x: Δq·σ_x.
    pub fn normalized_kx(&self, sigma_x: f64) -> f64 {
        self.dq_long * sigma_x
    }

    /// Phase wavevector conjugate to p̃ = p/σ_p: q₁τσ_p/m.
    pub fn normalized_kp(&self, sigma_p: f64) -> f64 {
        self.q1 * self.tau * sigma_p / self.mass
    }
}

/// Recoil wavevectors and projection angle for a beam at angle `phi` probed
/// after delay `tau`.
pub fn recoil_geometry(config: &ScenarioConfig, phi: f64, tau: f64) -> Result<RecoilKinematics> {
    check_phi(phi)?;
    ensure_finite("tau", tau)?;
    if tau < 0.0 {
        return Err(Error::invalid(
            "tau",
            format!("delay must be ≥ 0, got {tau}"),
        ));
    }
    let omega = config.guide.orbital_freq();
    let omega_tau = omega * tau;
    if omega_tau >= SMALL_ROTATION_LIMIT {
        return Err(Error::SmallRotation {
            omega_tau,
            limit: SMALL_ROTATION_LIMIT,
        });
    }
    let k = config.constants.wavenumber();
    let (sin, cos) = phi.sin_cos();
    let q1 = k * (1.0 + cos);
    let dq_long = -k * omega_tau * sin;
    let dq_trans = k * omega_tau * cos;
    let theta = guide_projection_angle(config, phi);
    Ok(RecoilKinematics {
        phi,
        tau,
        q1,
        dq_long,
        dq_trans,
        theta,
        mass: config.constants.atom_mass(),
    })
}

/// tan θ = (mΩσ_x/σ_p)·sin φ/(1 + cos φ); independent of τ.
pub fn guide_projection_angle(config: &ScenarioConfig, phi: f64) -> f64 {
    let ratio = chirp_ratio(config);
    // sin φ/(1 + cos φ) = tan(φ/2)
    (ratio * (phi / 2.0).tan()).atan()
}

/// Generic projection angle tan θ = −(Δq m / q₁τ)(σ_x/σ_p) for arbitrary
/// pump recoil `q1`, mismatch `dq`, and delay `tau` > 0.
pub fn projection_angle(q1: f64, dq: f64, tau: f64, sigma_x: f64, sigma_p: f64, mass: f64) -> f64 {
    (-(dq * mass * sigma_x) / (q1 * tau * sigma_p)).atan()
}

/// mΩσ_x/σ_p: rotation-induced position-momentum scale of the guide.
fn chirp_ratio(config: &ScenarioConfig) -> f64 {
    config.constants.atom_mass() * config.guide.orbital_freq() * config.beam.sigma_x()
        / config.beam.sigma_p()
}

/// Beam angle at which the probe reads the narrow axis of a chirped state
/// (θ = π/4): φ_c = 2·atan(σ_p/(mΩσ_x)).
pub fn critical_angle(config: &ScenarioConfig) -> f64 {
    2.0 * (1.0 / chirp_ratio(config)).atan()
}

/// Free ballistic evolution for `dt` seconds: x → x + p·dt/m.
///
/// The shear leaves σ_p and the determinant of the covariance unchanged, so
/// 1 − η² scales as σ_x²/σ_x'².
pub fn propagate(
    state: &CorrelatedGaussianState,
    dt: f64,
    constants: &Constants,
) -> Result<CorrelatedGaussianState> {
    ensure_finite("dt", dt)?;
    if dt < 0.0 {
        return Err(Error::invalid("dt", format!("must be ≥ 0, got {dt}")));
    }
    if dt == 0.0 {
        return Ok(*state);
    }
    let m = constants.atom_mass();
    let sx = state.sigma_x();
    let sp = state.sigma_p();
    let spread = sp * dt / m;
    // ⟨x p⟩/σ_p after the shear, and σ_x'² written as a sum of non-negative
    // terms so focusing beams (η < 0) do not cancel
    let corr_len = state.eta() * sx + spread;
    let var_x = corr_len * corr_len + sx * sx * state.decorrelation();
    let sx_new = var_x.sqrt();
    let eta_new = (corr_len / sx_new).clamp(-1.0, 1.0);
    let decorrelation = state.decorrelation() * (sx * sx) / var_x;
    let mean_x = state.mean_x() + state.mean_p() * dt / m;
    Ok(state.evolved(
        sx_new,
        eta_new,
        decorrelation,
        mean_x,
        state.timestamp() + dt,
    ))
}

/// Scattered-fraction readout from the center-of-mass shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteredFraction {
    /// Fraction clamped to [0, 1].
    pub fraction: f64,
    /// Unclamped value δx_cm / (v_recoil · t).
    pub raw: f64,
    pub clamped: bool,
}

/// Fraction of atoms transferred by superradiance, inferred from the shift
/// of the beam's azimuthal center of mass after `separation_time`.
pub fn scattered_fraction(
    delta_x_cm: f64,
    q_long: f64,
    separation_time: f64,
    constants: &Constants,
) -> Result<ScatteredFraction> {
    ensure_finite("delta_x_cm", delta_x_cm)?;
    ensure_positive("q_long", q_long)?;
    ensure_positive("separation_time", separation_time)?;
    let raw = delta_x_cm / (constants.recoil_velocity(q_long) * separation_time);
    if raw > FRACTION_INCONSISTENT {
        return Err(Error::Inconsistent(format!(
            "center-of-mass shift implies a scattered fraction of {raw:.3} > {FRACTION_INCONSISTENT}"
        )));
    }
    let fraction = raw.clamp(0.0, 1.0);
    Ok(ScatteredFraction {
        fraction,
        raw,
        clamped: fraction != raw,
    })
}

/// Angular range where the bichromatic geometry is defined.
pub(crate) fn check_phi(phi: f64) -> Result<f64> {
    ensure_finite("phi", phi)?;
    if phi.abs() >= PI {
        return Err(Error::Domain(format!("|φ| must be < π, got {phi}")));
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{deg_to_rad, guided_rb87_scenario, rad_to_deg, GuideConfig};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn tangential_incidence_has_no_mismatch() {
        let cfg = guided_rb87_scenario();
        let kin = recoil_geometry(&cfg, 0.0, 1e-3).unwrap();
        assert_eq!(kin.theta, 0.0);
        assert_eq!(kin.dq_long, 0.0);
        assert_relative_eq!(
            kin.q1,
            2.0 * cfg.constants.wavenumber(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn geometry_at_38_degrees() {
        let cfg = guided_rb87_scenario();
        let kin = recoil_geometry(&cfg, deg_to_rad(38.0), 50e-6).unwrap();
        assert!((kin.q1 - 1.440e7).abs() < 0.001e7, "q1 = {}", kin.q1);
        assert!(
            (rad_to_deg(kin.theta) - 50.5).abs() < 0.05,
            "θ = {}",
            rad_to_deg(kin.theta)
        );
        let generic = projection_angle(
            kin.q1,
            kin.dq_long,
            kin.tau,
            cfg.beam.sigma_x(),
            cfg.beam.sigma_p(),
            cfg.constants.atom_mass(),
        );
        assert_relative_eq!(kin.theta, generic, max_relative = 1e-12);
        assert_relative_eq!(kin.q2(), kin.q1 + kin.dq_long);
    }

    #[test]
    fn critical_angle_examples() {
        let cfg = guided_rb87_scenario();
        let phi_c = critical_angle(&cfg);
        assert!(
            (rad_to_deg(phi_c) - 31.7).abs() < 0.05,
            "φ_c = {}",
            rad_to_deg(phi_c)
        );
        let kin = recoil_geometry(&cfg, phi_c, 1e-3).unwrap();
        assert_relative_eq!(kin.theta, PI / 4.0, max_relative = 1e-12);

        let doubled = cfg.with_guide(
            GuideConfig::new(
                cfg.guide.radius(),
                2.0 * cfg.guide.orbital_freq(),
                cfg.guide.transverse_freq(),
            )
            .unwrap(),
        );
        assert!((rad_to_deg(critical_angle(&doubled)) - 16.2).abs() < 0.05);

        // σ_p = mΩσ_x puts the critical angle at 90°
        let c = cfg.constants;
        let sp = c.atom_mass() * cfg.guide.orbital_freq() * cfg.beam.sigma_x();
        let beam = CorrelatedGaussianState::new(cfg.beam.sigma_x(), sp, 0.5, 1.0).unwrap();
        assert_relative_eq!(
            critical_angle(&cfg.with_beam(beam)),
            FRAC_PI_2,
            max_relative = 1e-14
        );
    }

    #[test]
    fn small_rotation_guard() {
        let cfg = guided_rb87_scenario();
        let tau = 0.3 / cfg.guide.orbital_freq();
        assert!(matches!(
            recoil_geometry(&cfg, 0.5, tau),
            Err(Error::SmallRotation { .. })
        ));
        assert!(recoil_geometry(&cfg, 0.5, 0.99 * tau).is_ok());
        assert!(recoil_geometry(&cfg, PI, 1e-6).is_err());
        assert!(recoil_geometry(&cfg, 0.1, -1e-6).is_err());
    }

    #[test]
    fn propagate_zero_is_identity() {
        let c = Constants::rb87();
        let s = CorrelatedGaussianState::new(10e-6, c.atom_mass() * 1.8e-3, 0.3, 1e5).unwrap();
        assert_eq!(propagate(&s, 0.0, &c).unwrap(), s);
        assert!(propagate(&s, -1.0, &c).is_err());
    }

    #[test]
    fn propagate_reaches_half_revolution_width() {
        let c = Constants::rb87();
        let s = CorrelatedGaussianState::new(10e-6, c.atom_mass() * 1.8e-3, 0.0, 3e5).unwrap();
        let out = propagate(&s, 66.5e-3, &c).unwrap();
        assert!(
            (out.sigma_x() - 120e-6).abs() < 0.5e-6,
            "σ_x' = {}",
            out.sigma_x()
        );
        assert_relative_eq!(
            out.phase_space_area(&c),
            s.phase_space_area(&c),
            max_relative = 1e-12
        );
        assert!(out.eta() > 0.99 && out.eta() < 1.0);
        assert_relative_eq!(out.timestamp(), 66.5e-3);
    }

    #[test]
    fn propagate_moves_mean() {
        let c = Constants::rb87();
        let v = 1e-3;
        let s = CorrelatedGaussianState::new(1e-5, c.atom_mass() * 1e-3, 0.0, 1.0)
            .unwrap()
            .with_mean(0.0, c.atom_mass() * v)
            .unwrap();
        let out = propagate(&s, 2.0, &c).unwrap();
        assert_relative_eq!(out.mean_x(), 2.0 * v, max_relative = 1e-14);
    }

    #[test]
    fn scattered_fraction_examples() {
        let c = Constants::rb87();
        let q = 2.0 * c.wavenumber();
        assert_eq!(scattered_fraction(0.0, q, 0.16, &c).unwrap().fraction, 0.0);
        let f = scattered_fraction(188e-6, q, 0.16, &c).unwrap();
        assert!((f.fraction - 0.10).abs() < 0.002, "{f:?}");
        let full = scattered_fraction(1.883e-3, q, 0.16, &c).unwrap();
        assert!((full.raw - 1.0).abs() < 0.002);
        let over = scattered_fraction(1.95e-3, q, 0.16, &c).unwrap();
        assert!(over.clamped && over.fraction == 1.0);
        assert!(matches!(
            scattered_fraction(2.5e-3, q, 0.16, &c),
            Err(Error::Inconsistent(_))
        ));
        assert!(scattered_fraction(1e-4, q, 0.0, &c).is_err());
        let neg = scattered_fraction(-1e-5, q, 0.16, &c).unwrap();
        assert!(neg.clamped && neg.fraction == 0.0);
    }
}
