//! Inverse problems: filtered back-projection of tomograms into a Wigner
//! grid, and inference of the beam correlation, phase-space area and
//! coherence length from measured quantities.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use sha2::{Digest, Sha256};

use crate::engine::{transverse_bound, DecayRates};
use crate::error::{ensure_finite, Error, Result};
use crate::kinematics::check_phi;
use crate::units::ScenarioConfig;
use crate::wigner::{linspace, CorrelatedGaussianState, ProjectionProfile, WignerGrid, ETA_CAP};

/// Below this many angles reconstructions carry an accuracy warning.
pub const MIN_ACCURATE_ANGLES: usize = 16;

/// Tomograms at distinct angles θ ∈ [0, π) sharing one uniform s axis.
/// Each profile is rescaled to unit integral on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    profiles: Vec<ProjectionProfile>,
}

impl ProjectionSet {
    pub fn new(profiles: Vec<ProjectionProfile>) -> Result<Self> {
        if profiles.len() < 2 {
            return Err(Error::invalid(
                "projection set",
                format!("need at least 2 angles, got {}", profiles.len()),
            ));
        }
        for p in &profiles {
            if !(0.0..PI).contains(&p.theta()) {
                return Err(Error::invalid(
                    "projection set",
                    format!("θ = {} outside [0, π)", p.theta()),
                ));
            }
        }
        let mut thetas: Vec<f64> = profiles.iter().map(|p| p.theta()).collect();
        thetas.sort_by(f64::total_cmp);
        if thetas.windows(2).any(|w| w[1] - w[0] < 1e-12) {
            return Err(Error::invalid("projection set", "angles must be distinct"));
        }
        let s0 = profiles[0].s();
        let span = s0[s0.len() - 1] - s0[0];
        for p in &profiles[1..] {
            let s = p.s();
            if s.len() != s0.len() || s.iter().zip(s0).any(|(a, b)| (a - b).abs() > 1e-9 * span) {
                return Err(Error::Inconsistent(format!(
                    "profile at θ = {} does not share the common s grid",
                    p.theta()
                )));
            }
        }
        let step = span / (s0.len() - 1) as f64;
        if s0
            .windows(2)
            .any(|w| ((w[1] - w[0]) - step).abs() > 1e-6 * step)
        {
            return Err(Error::Inconsistent(
                "s grid must be uniformly spaced".into(),
            ));
        }
        let profiles = profiles
            .into_iter()
            .map(|p| {
                let norm = p.integral();
                let density = p.density().iter().map(|d| d / norm).collect();
                ProjectionProfile::new(p.theta(), p.s().to_vec(), density)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { profiles })
    }

    pub fn profiles(&self) -> &[ProjectionProfile] {
        &self.profiles
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn s_axis(&self) -> &[f64] {
        self.profiles[0].s()
    }

    /// Projections of `source` at `n_angles` equispaced angles on [0, π),
    /// each sampled on `s_axis`.
    pub fn from_state(
        state: &CorrelatedGaussianState,
        n_angles: usize,
        s_axis: &[f64],
    ) -> Result<Self> {
        let profiles = (0..n_angles)
            .map(|i| state.project_on(PI * i as f64 / n_angles as f64, s_axis))
            .collect::<Result<Vec<_>>>()?;
        Self::new(profiles)
    }
}

/// Result of filtered back-projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub grid: WignerGrid,
    pub warnings: Vec<String>,
}

/// Filtered back-projection onto an `n_x` × `n_p` grid spanning the
/// projections' s range.
///
/// Each profile is ramp-filtered in the frequency domain (band-limited
/// Ram-Lak response with a raised-cosine roll-off reaching zero at the
/// sampling Nyquist frequency), then smeared back along its lines with
/// linear interpolation in s. The grid is renormalized to unit integral.
pub fn fbp_reconstruct(
    projections: &ProjectionSet,
    n_x: usize,
    n_p: usize,
) -> Result<Reconstruction> {
    let s_axis = projections.s_axis();
    let n_s = s_axis.len();
    let s_min = s_axis[0];
    let ds = (s_axis[n_s - 1] - s_min) / (n_s - 1) as f64;
    let half_width = s_axis[0].abs().max(s_axis[n_s - 1].abs());

    let mut warnings = Vec::new();
    if projections.len() < MIN_ACCURATE_ANGLES {
        warnings.push(format!(
            "only {} projection angles; at least {MIN_ACCURATE_ANGLES} are needed for quantitative accuracy",
            projections.len()
        ));
    }

    // pixels in the corners of the square project beyond the measured s
    // range, where the filtered profiles still carry their negative tails
    let margin = ((std::f64::consts::SQRT_2 - 1.0) * half_width / ds).ceil() as usize + 2;
    let filter = RampFilter::new(n_s, margin, ds);
    let filtered: Vec<Vec<f64>> = projections
        .profiles()
        .par_iter()
        .map(|p| filter.apply(p.density()))
        .collect();
    let q_start = s_min - margin as f64 * ds;
    let n_q = n_s + 2 * margin;
    let trig: Vec<(f64, f64)> = projections
        .profiles()
        .iter()
        .map(|p| p.theta().sin_cos())
        .collect();
    let dtheta = PI / projections.len() as f64;

    let xs = linspace(-half_width, half_width, n_x);
    let ps = linspace(-half_width, half_width, n_p);
    let mut values = vec![0.0; n_x * n_p];
    // rows are independent and each pixel sums angles in a fixed order
    values
        .par_chunks_mut(n_p)
        .zip(xs.par_iter())
        .for_each(|(row, &x)| {
            for (v, &p) in row.iter_mut().zip(&ps) {
                let mut acc = 0.0;
                for (q, &(sin, cos)) in filtered.iter().zip(&trig) {
                    let s = p * cos + x * sin;
                    let f = (s - q_start) / ds;
                    if f < 0.0 || f > (n_q - 1) as f64 {
                        continue;
                    }
                    let k = (f.floor() as usize).min(n_q - 2);
                    let t = f - k as f64;
                    acc += (1.0 - t) * q[k] + t * q[k + 1];
                }
                *v = acc * dtheta;
            }
        });

    // a tomogram carries no absolute scale beyond its normalization
    let scale = (1.0, 1.0);
    let grid = WignerGrid::from_values(values, n_x, n_p, half_width, scale)?;
    let norm = grid.integral();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::Inconsistent(format!(
            "reconstruction has non-positive integral {norm}"
        )));
    }
    let values = grid.values().iter().map(|v| v / norm).collect();
    let grid = WignerGrid::from_values(values, n_x, n_p, half_width, scale)?;
    Ok(Reconstruction { grid, warnings })
}

/// Frequency response of the apodized ramp filter for one s-grid size.
///
/// Filtered profiles are returned on the input grid extended by `margin`
/// samples on each side; the buffer is long enough that the circular
/// convolution never wraps within that range.
struct RampFilter {
    len: usize,
    margin: usize,
    response: Vec<f64>,
    ds: f64,
}

impl RampFilter {
    fn new(n_s: usize, margin: usize, ds: f64) -> Self {
        let len = (2 * (n_s + margin) + 1).next_power_of_two();
        // spatial Ram-Lak kernel on a circular buffer
        let mut kernel = vec![Complex::new(0.0, 0.0); len];
        for (i, k) in kernel.iter_mut().enumerate() {
            let n = if i <= len / 2 {
                i as i64
            } else {
                i as i64 - len as i64
            };
            let h = if n == 0 {
                1.0 / (4.0 * ds * ds)
            } else if n % 2 != 0 {
                -1.0 / (PI * PI * (n * n) as f64 * ds * ds)
            } else {
                0.0
            };
            *k = Complex::new(h, 0.0);
        }
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(len).process(&mut kernel);
        let response = kernel
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let f = i.min(len - i) as f64 / (len / 2) as f64;
                let window = 0.5 * (1.0 + (PI * f).cos());
                h.re * window
            })
            .collect();
        Self {
            len,
            margin,
            response,
            ds,
        }
    }

    fn apply(&self, profile: &[f64]) -> Vec<f64> {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(self.len);
        let inv = planner.plan_fft_inverse(self.len);
        let mut buf = vec![Complex::new(0.0, 0.0); self.len];
        for (b, &v) in buf[self.margin..].iter_mut().zip(profile) {
            *b = Complex::new(v, 0.0);
        }
        fwd.process(&mut buf);
        for (b, h) in buf.iter_mut().zip(&self.response) {
            *b *= h;
        }
        inv.process(&mut buf);
        let norm = self.ds / self.len as f64;
        buf.iter()
            .take(profile.len() + 2 * self.margin)
            .map(|c| c.re * norm)
            .collect()
    }
}

/// Least-squares correlation estimate from projection widths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaEstimate {
    pub eta: f64,
    /// One-sigma uncertainty from the residual scatter.
    pub sigma: f64,
}

/// Fits width² = 1 + η sin 2θ to (θ, rms width) pairs in normalized units.
///
/// Widths at θ = 0 and π/2 alone carry no information on η: the marginals
/// of a correlated and an uncorrelated ensemble coincide.
pub fn eta_from_width_samples(samples: &[(f64, f64)]) -> Result<EtaEstimate> {
    for &(theta, w) in samples {
        ensure_finite("theta", theta)?;
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::invalid("rms width", format!("must be > 0, got {w}")));
        }
    }
    if samples
        .iter()
        .all(|(theta, _)| (2.0 * theta).sin().abs() < 1e-9)
    {
        return Err(Error::Unidentifiable(
            "only θ ∈ {0, π/2} sampled; position and momentum marginals cannot distinguish a \
             correlated from an uncorrelated ensemble"
                .into(),
        ));
    }
    if samples.len() < 3 {
        return Err(Error::invalid(
            "width samples",
            format!("need at least 3, got {}", samples.len()),
        ));
    }
    let (mut sy, mut ss) = (0.0, 0.0);
    for &(theta, w) in samples {
        let s = (2.0 * theta).sin();
        sy += s * (w * w - 1.0);
        ss += s * s;
    }
    let eta = sy / ss;
    let ssr: f64 = samples
        .iter()
        .map(|&(theta, w)| (w * w - 1.0 - eta * (2.0 * theta).sin()).powi(2))
        .sum();
    let sigma = (ssr / (samples.len() - 1) as f64 / ss).sqrt();
    Ok(EtaEstimate { eta, sigma })
}

/// Outcome of inverting a coherence time for η.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feasibility {
    Feasible,
    /// No η in (−1, 1) reproduces τ_c; the value was clamped to ±cap.
    /// `raw_one_minus_eta` is the unclamped solution.
    Capped {
        raw_one_minus_eta: f64,
    },
    /// sin φ = 0: the probe reads only the momentum marginal.
    Unidentifiable,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Feasibility::Feasible => "feasible",
            Feasibility::Capped { .. } => "capped",
            Feasibility::Unidentifiable => "unidentifiable",
        }
    }
}

/// Inputs an [`AnalysisReport`] was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisInputs {
    pub phi: f64,
    pub tau_c: f64,
    pub sigma_x: f64,
    pub sigma_p: f64,
    pub orbital_freq: f64,
    pub transverse_freq: f64,
    pub wavelength: f64,
    pub atom_mass: f64,
}

impl AnalysisInputs {
    /// SHA-256 over the shortest round-trip representation of each input.
    pub fn digest(&self) -> String {
        let text = format!(
            "phi={:e};tau_c={:e};sigma_x={:e};sigma_p={:e};omega={:e};omega_t={:e};lambda={:e};m={:e}",
            self.phi,
            self.tau_c,
            self.sigma_x,
            self.sigma_p,
            self.orbital_freq,
            self.transverse_freq,
            self.wavelength,
            self.atom_mass
        );
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub eta_hat: f64,
    pub one_minus_eta: f64,
    /// Occupied phase-space area in units of ħ.
    pub area_hbar: f64,
    /// σ_xσ_p/ħ.
    pub area_max_hbar: f64,
    /// ℒ = (ħq₁/m)τ_c in m.
    pub coherence_length: f64,
    /// σ_x/ℒ.
    pub phase_space_cells: f64,
    /// Transverse phase-matching bound on τ_c; absent for |φ| ≥ π/2.
    pub transverse_bound: Option<f64>,
    pub feasibility: Feasibility,
    pub inputs: AnalysisInputs,
    pub inputs_digest: String,
}

/// Inverts a measured 1/e coherence time at beam angle `phi` for η, using
/// 1/τ_c² = A₁² − 2ηA₁B₁ + B₁² with the rates of [`DecayRates`]. The
/// relation is linear in η and solved as
/// 1 − η = (1/τ_c² − (A₁ − B₁)²)/(2A₁B₁) to keep precision near η = 1.
pub fn infer_state_from_tau_c(
    config: &ScenarioConfig,
    phi: f64,
    tau_c: f64,
) -> Result<AnalysisReport> {
    check_phi(phi)?;
    if !(tau_c.is_finite() && tau_c > 0.0) {
        return Err(Error::invalid("tau_c", format!("must be > 0, got {tau_c}")));
    }
    let c = &config.constants;
    let beam = &config.beam;
    let rates = DecayRates::new(config, phi)?;
    let (a, b) = (rates.a, rates.b);

    let cap_one_minus = 1.0 - ETA_CAP;
    let (one_minus_eta, feasibility) = if a.abs() <= 1e-12 * b.abs() {
        (1.0, Feasibility::Unidentifiable)
    } else {
        let raw = (1.0 / (tau_c * tau_c) - (a - b).powi(2)) / (2.0 * a * b);
        if raw < cap_one_minus {
            (
                cap_one_minus,
                Feasibility::Capped {
                    raw_one_minus_eta: raw,
                },
            )
        } else if raw > 2.0 - cap_one_minus {
            (
                2.0 - cap_one_minus,
                Feasibility::Capped {
                    raw_one_minus_eta: raw,
                },
            )
        } else {
            (raw, Feasibility::Feasible)
        }
    };
    let state = CorrelatedGaussianState::with_one_minus_eta(
        beam.sigma_x(),
        beam.sigma_p(),
        one_minus_eta,
        beam.atom_number(),
    )?;
    let q1 = c.wavenumber() * (1.0 + phi.cos());
    let coherence_length = c.recoil_velocity(q1) * tau_c;
    let inputs = AnalysisInputs {
        phi,
        tau_c,
        sigma_x: beam.sigma_x(),
        sigma_p: beam.sigma_p(),
        orbital_freq: config.guide.orbital_freq(),
        transverse_freq: config.guide.transverse_freq(),
        wavelength: c.wavelength(),
        atom_mass: c.atom_mass(),
    };
    Ok(AnalysisReport {
        eta_hat: state.eta(),
        one_minus_eta,
        area_hbar: state.phase_space_area(c),
        area_max_hbar: state.max_phase_space_area(c),
        coherence_length,
        phase_space_cells: beam.sigma_x() / coherence_length,
        transverse_bound: transverse_bound(config, phi).ok(),
        feasibility,
        inputs_digest: inputs.digest(),
        inputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{analytic_coherence_time, fitting_tau_grid, simulate_decay, Engine};
    use crate::fit::fit_coherence_time;
    use crate::kinematics::critical_angle;
    use crate::units::{deg_to_rad, guided_rb87_scenario};

    fn phantom(eta: f64, n_angles: usize) -> ProjectionSet {
        let s = CorrelatedGaussianState::new(1.0, 1.0, eta, 1.0).unwrap();
        ProjectionSet::from_state(&s, n_angles, &linspace(-6.0, 6.0, 256)).unwrap()
    }

    #[test]
    fn fbp_uncorrelated_phantom() {
        let r = fbp_reconstruct(&phantom(0.0, 180), 256, 256).unwrap();
        assert!(r.warnings.is_empty());
        let m = r.grid.moments();
        assert!(m.corr.abs() < 0.005, "{m:?}");
        assert!(
            (m.var_x - 1.0).abs() < 0.02 && (m.var_p - 1.0).abs() < 0.02,
            "{m:?}"
        );
    }

    #[test]
    fn fbp_correlated_phantom() {
        let r = fbp_reconstruct(&phantom(0.99, 180), 256, 256).unwrap();
        let m = r.grid.moments();
        assert!((m.corr - 0.99).abs() < 0.005, "{m:?}");
    }

    #[test]
    fn fbp_few_angles_warns() {
        let r = fbp_reconstruct(&phantom(0.5, 2), 64, 64).unwrap();
        assert_eq!(r.warnings.len(), 1);
        assert!((r.grid.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_set_validation() {
        let s = CorrelatedGaussianState::new(1.0, 1.0, 0.2, 1.0).unwrap();
        let axis = linspace(-6.0, 6.0, 64);
        let a = s.project_on(0.0, &axis).unwrap();
        assert!(ProjectionSet::new(vec![a.clone()]).is_err());
        assert!(ProjectionSet::new(vec![a.clone(), a.clone()]).is_err());
        let other = s.project_on(1.0, &linspace(-5.0, 5.0, 64)).unwrap();
        assert!(matches!(
            ProjectionSet::new(vec![a.clone(), other]),
            Err(Error::Inconsistent(_))
        ));
        let out_of_range = s.project_on(4.0, &axis).unwrap();
        assert!(ProjectionSet::new(vec![a, out_of_range]).is_err());
    }

    #[test]
    fn eta_from_widths_examples() {
        let est = eta_from_width_samples(&[
            (0.0, 1.0),
            (PI / 4.0, 1.8f64.sqrt()),
            (3.0 * PI / 4.0, 0.2f64.sqrt()),
        ])
        .unwrap();
        assert!((est.eta - 0.8).abs() < 1e-12, "{est:?}");
        assert!(est.sigma < 1e-12);

        assert!(matches!(
            eta_from_width_samples(&[(0.0, 1.0), (PI / 2.0, 1.0)]),
            Err(Error::Unidentifiable(_))
        ));

        let flat = eta_from_width_samples(&[(0.3, 1.0), (1.0, 1.0), (2.0, 1.0)]).unwrap();
        assert!(flat.eta.abs() < 1e-15);
    }

    #[test]
    fn inference_at_critical_angle() {
        let cfg = guided_rb87_scenario();
        let phi_c = critical_angle(&cfg);
        let r = infer_state_from_tau_c(&cfg, phi_c, 1.19e-3).unwrap();
        assert!(r.feasibility.is_feasible());
        assert!((r.one_minus_eta / 4.9e-4 - 1.0).abs() < 0.05, "{r:?}");
        assert!((r.area_hbar - 9.3).abs() < 0.3);
        assert!((r.coherence_length - 12.9e-6).abs() < 0.15e-6);
        assert!(r.area_hbar <= r.area_max_hbar);
        assert_eq!(r.inputs_digest.len(), 64);
    }

    #[test]
    fn inference_degenerate_geometry() {
        let cfg = guided_rb87_scenario();
        let r = infer_state_from_tau_c(&cfg, 0.0, 30e-6).unwrap();
        assert_eq!(r.feasibility, Feasibility::Unidentifiable);
        assert_eq!(r.area_hbar, r.area_max_hbar);
        assert!(infer_state_from_tau_c(&cfg, 0.3, 0.0).is_err());
    }

    #[test]
    fn inference_caps_impossible_tau() {
        let cfg = guided_rb87_scenario();
        let phi = deg_to_rad(45.0);
        // far longer than any η < 1 allows away from φ_c
        let r = infer_state_from_tau_c(&cfg, phi, 1.0).unwrap();
        assert!(
            matches!(r.feasibility, Feasibility::Capped { raw_one_minus_eta } if raw_one_minus_eta < 0.0)
        );
        assert!(r.one_minus_eta > 0.0);
    }

    #[test]
    fn inference_round_trip_at_38_degrees() {
        let cfg = guided_rb87_scenario();
        let phi = deg_to_rad(38.0);
        let tc = analytic_coherence_time(&cfg, phi).unwrap();
        let taus = fitting_tau_grid(&cfg, tc, 40);
        let fit =
            fit_coherence_time(&simulate_decay(&cfg, phi, &taus, Engine::ClosedForm).unwrap())
                .unwrap();
        let r = infer_state_from_tau_c(&cfg, phi, fit.tau_c).unwrap();
        assert!(
            (r.one_minus_eta / 4.9e-4 - 1.0).abs() < 0.01,
            "{}",
            r.one_minus_eta
        );
    }

    #[test]
    fn coherence_length_is_linear_in_tau() {
        let cfg = guided_rb87_scenario();
        let a = infer_state_from_tau_c(&cfg, 0.5, 1e-4).unwrap();
        let b = infer_state_from_tau_c(&cfg, 0.5, 3e-4).unwrap();
        assert!((b.coherence_length / a.coherence_length - 3.0).abs() < 1e-14);
    }
}
