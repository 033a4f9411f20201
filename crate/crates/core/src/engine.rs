//! Superradiant pump-probe signal.
//!
//! The probe scattering rate, normalized to its value at zero delay, is the
//! squared modulus of the Wigner characteristic function at the phase-matching
//! wavevector:
//!
//! ```text
//! Γ(τ)/Γ(0) = |∫∫ exp(i(q₁τp/m + Δq x)) 𝒲(x, p) dx dp|²
//! ```
//!
//! Only longitudinal phase matching enters; the radial mismatch feeds the
//! separate [`transverse_bound`].

use std::f64::consts::FRAC_PI_4;

use rayon::prelude::*;
use rustfft::num_complex::Complex;

use crate::error::{ensure_positive, Error, Result};
use crate::fit::{fit_coherence_time, CoherenceFit};
use crate::kinematics::{check_phi, recoil_geometry, RecoilKinematics, SMALL_ROTATION_LIMIT};
use crate::units::{validate_tau_grid, Constants, ScenarioConfig};
use crate::wigner::{linspace, CorrelatedGaussianState, WignerGrid};

/// Half-width (normalized units) of grids built for the quadrature engine.
pub const QUADRATURE_HALF_WIDTH: f64 = 8.0;
pub const QUADRATURE_MIN_POINTS: usize = 256;
pub const QUADRATURE_MAX_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveSource {
    SimulatedClosedForm,
    SimulatedQuadrature,
    Ingested,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySample {
    pub tau: f64,
    pub gamma: f64,
    pub sigma_gamma: Option<f64>,
}

/// Sampled pump-probe signal Γ(τ).
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    samples: Vec<DecaySample>,
    phi: f64,
    source: CurveSource,
}

impl DecayCurve {
    pub fn new(samples: Vec<DecaySample>, phi: f64, source: CurveSource) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("decay curve", "no samples"));
        }
        if samples.windows(2).any(|w| w[1].tau <= w[0].tau) {
            return Err(Error::invalid(
                "decay curve",
                "delays must be strictly increasing",
            ));
        }
        for s in &samples {
            if !s.tau.is_finite() || !s.gamma.is_finite() {
                return Err(Error::invalid("decay curve", "non-finite sample"));
            }
            if let Some(sig) = s.sigma_gamma {
                ensure_positive("sigma_gamma", sig)?;
            }
            if source != CurveSource::Ingested && !(0.0..=1.0).contains(&s.gamma) {
                return Err(Error::invalid(
                    "decay curve",
                    format!("simulated Γ = {} outside [0, 1]", s.gamma),
                ));
            }
        }
        Ok(Self {
            samples,
            phi,
            source,
        })
    }

    /// Measured curve without per-point uncertainties.
    pub fn ingested(taus: &[f64], gammas: &[f64], phi: f64) -> Result<Self> {
        if taus.len() != gammas.len() {
            return Err(Error::invalid(
                "decay curve",
                "tau and gamma lengths differ",
            ));
        }
        let samples = taus
            .iter()
            .zip(gammas)
            .map(|(&tau, &gamma)| DecaySample {
                tau,
                gamma,
                sigma_gamma: None,
            })
            .collect();
        Self::new(samples, phi, CurveSource::Ingested)
    }

    pub fn samples(&self) -> &[DecaySample] {
        &self.samples
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn source(&self) -> CurveSource {
        self.source
    }

    pub fn taus(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.tau).collect()
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.gamma).collect()
    }

    /// Same curve with every Γ multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|s| DecaySample {
                    gamma: s.gamma * factor,
                    sigma_gamma: s.sigma_gamma.map(|v| v * factor.abs()),
                    ..*s
                })
                .collect(),
            phi: self.phi,
            source: CurveSource::Ingested,
        }
    }
}

/// Closed-form Γ(τ)/Γ(0) for a Gaussian state:
/// exp(−[A² − 2ηAB + B²]) with A = kΩτ sin φ σ_x and B = q₁τσ_p/m.
pub fn gamma_closed_form(state: &CorrelatedGaussianState, kin: &RecoilKinematics) -> f64 {
    let kx = kin.normalized_kx(state.sigma_x());
    let kp = kin.normalized_kp(state.sigma_p());
    state.characteristic_modulus_sq(kx, kp)
}

/// Γ(τ)/Γ(0) from trapezoidal quadrature of the phase-matching integral
/// over a sampled Wigner function.
///
/// Requires max(|Δq|σ_x, q₁τσ_p/m) · step < π/4 on the grid's normalized
/// axes.
pub fn gamma_quadrature(grid: &WignerGrid, kin: &RecoilKinematics) -> Result<f64> {
    let (sigma_x, sigma_p) = grid.scale();
    let kx = kin.normalized_kx(sigma_x);
    let kp = kin.normalized_kp(sigma_p);
    let step = grid.step_x().max(grid.step_p());
    let kmax = kx.abs().max(kp.abs());
    let product = kmax * step;
    if product >= FRAC_PI_4 {
        return Err(Error::UnderResolved {
            product,
            required_points: required_points(kmax, grid.half_width()),
        });
    }
    let xs = grid.axis_x();
    let ps = grid.axis_p();
    let n_p = grid.n_p();
    let weight_p: Vec<f64> = (0..n_p)
        .map(|j| if j == 0 || j == n_p - 1 { 0.5 } else { 1.0 })
        .collect();
    let phase_p: Vec<Complex<f64>> = ps
        .iter()
        .zip(&weight_p)
        .map(|(&p, &w)| Complex::from_polar(w, kp * p))
        .collect();
    // per-row sums collected in order, then reduced sequentially
    let rows: Vec<(Complex<f64>, f64)> = xs
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut acc = Complex::new(0.0, 0.0);
            let mut mass = 0.0;
            for (j, (ph, w)) in phase_p.iter().zip(&weight_p).enumerate() {
                let v = grid.value(i, j);
                acc += ph * v;
                mass += w * v;
            }
            let wx = if i == 0 || i == xs.len() - 1 {
                0.5
            } else {
                1.0
            };
            (Complex::from_polar(wx, kx * x) * acc, wx * mass)
        })
        .collect();
    let (total, mass) = rows
        .iter()
        .fold((Complex::new(0.0, 0.0), 0.0), |(a, m), (z, w)| {
            (a + z, m + w)
        });
    Ok(total.norm_sqr() / (mass * mass))
}

/// Grid points per axis needed to resolve wavevector `kmax` over ±half_width.
fn required_points(kmax: f64, half_width: f64) -> usize {
    (2.0 * half_width * kmax / FRAC_PI_4).ceil() as usize + 2
}

/// Grid used by the quadrature engine for `state` and the largest phase
/// wavevector `kmax` it will be asked about.
pub fn quadrature_grid(state: &CorrelatedGaussianState, kmax: f64) -> Result<WignerGrid> {
    let h = QUADRATURE_HALF_WIDTH;
    let narrow = state.one_minus_eta().min(state.one_plus_eta()).sqrt();
    let for_phase = required_points(kmax * 1.05, h);
    let for_shape = (2.0 * h / narrow).ceil() as usize + 1;
    let n = QUADRATURE_MIN_POINTS.max(for_phase).max(for_shape);
    if n > QUADRATURE_MAX_POINTS {
        if for_phase > QUADRATURE_MAX_POINTS {
            return Err(Error::UnderResolved {
                product: kmax * 2.0 * h / (QUADRATURE_MAX_POINTS - 1) as f64,
                required_points: for_phase,
            });
        }
        return Err(Error::GridTooCoarse(format!(
            "resolving the narrow phase-space axis (width {narrow:.2e}) needs {for_shape} points per axis, limit is {QUADRATURE_MAX_POINTS}"
        )));
    }
    WignerGrid::from_state(state, n, n, h)
}

/// Per-unit-delay phase rates of the closed-form decay at beam angle φ:
/// A₁ = kΩ sin φ σ_x and B₁ = q₁σ_p/m, so Γ = exp(−τ²[A₁² − 2ηA₁B₁ + B₁²]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRates {
    pub a: f64,
    pub b: f64,
}

impl DecayRates {
    pub fn new(config: &ScenarioConfig, phi: f64) -> Result<Self> {
        check_phi(phi)?;
        let k = config.constants.wavenumber();
        let omega = config.guide.orbital_freq();
        let (sin, cos) = phi.sin_cos();
        Ok(Self {
            a: k * omega * sin * config.beam.sigma_x(),
            b: k * (1.0 + cos) * config.beam.sigma_p() / config.constants.atom_mass(),
        })
    }

    /// 1/τ_c² for the given state's η.
    pub fn inverse_tau_c_sq(&self, state: &CorrelatedGaussianState) -> f64 {
        // A² − 2ηAB + B²
        state.quadratic_form(-self.a, self.b)
    }

    /// Analytic 1/e time of Γ(τ).
    pub fn coherence_time(&self, state: &CorrelatedGaussianState) -> f64 {
        1.0 / self.inverse_tau_c_sq(state).sqrt()
    }
}

/// Analytic 1/e time of the simulated decay at beam angle `phi`.
pub fn analytic_coherence_time(config: &ScenarioConfig, phi: f64) -> Result<f64> {
    Ok(DecayRates::new(config, phi)?.coherence_time(&config.beam))
}

/// Simulated Γ(τ) at beam angle `phi` for the configured beam.
pub fn simulate_decay(
    config: &ScenarioConfig,
    phi: f64,
    tau_grid: &[f64],
    engine: Engine,
) -> Result<DecayCurve> {
    validate_tau_grid(tau_grid)?;
    let kins: Vec<RecoilKinematics> = tau_grid
        .iter()
        .map(|&tau| recoil_geometry(config, phi, tau))
        .collect::<Result<_>>()?;
    let state = &config.beam;
    let (gammas, source) = match engine {
        Engine::ClosedForm => (
            kins.iter()
                .map(|k| gamma_closed_form(state, k))
                .collect::<Vec<_>>(),
            CurveSource::SimulatedClosedForm,
        ),
        Engine::Quadrature => {
            let kmax = kins
                .iter()
                .map(|k| {
                    k.normalized_kx(state.sigma_x())
                        .abs()
                        .max(k.normalized_kp(state.sigma_p()).abs())
                })
                .fold(0.0, f64::max);
            let grid = quadrature_grid(state, kmax)?;
            let gammas = kins
                .iter()
                .map(|k| gamma_quadrature(&grid, k).map(|g| g.clamp(0.0, 1.0)))
                .collect::<Result<Vec<_>>>()?;
            (gammas, CurveSource::SimulatedQuadrature)
        }
    };
    let samples = tau_grid
        .iter()
        .zip(gammas)
        .map(|(&tau, gamma)| DecaySample {
            tau,
            gamma,
            sigma_gamma: None,
        })
        .collect();
    DecayCurve::new(samples, phi, source)
}

/// Delay grid for fitting a decay whose 1/e time is about `tau_c`: spans
/// 2.5 τ_c, truncated inside the small-rotation limit.
pub fn fitting_tau_grid(config: &ScenarioConfig, tau_c: f64, points: usize) -> Vec<f64> {
    let limit = 0.95 * SMALL_ROTATION_LIMIT / config.guide.orbital_freq();
    linspace(0.0, (2.5 * tau_c).min(limit), points)
}

/// One φ of a coherence-time sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub phi: f64,
    /// Fitted 1/e time of the simulated closed-form decay.
    pub fit: CoherenceFit,
    /// Analytic 1/e time for the configured η.
    pub tau_c_analytic: f64,
    /// Analytic 1/e time of an uncorrelated ensemble (η = 0).
    pub tau_c_uncorrelated: f64,
}

/// Points per simulated decay in a sweep.
pub const SWEEP_DECAY_POINTS: usize = 40;

/// τ_c(φ) for each angle, evaluated in parallel and returned in input order.
pub fn sweep_coherence_time(config: &ScenarioConfig, phis: &[f64]) -> Result<Vec<SweepPoint>> {
    let uncorrelated = CorrelatedGaussianState::new(
        config.beam.sigma_x(),
        config.beam.sigma_p(),
        0.0,
        config.beam.atom_number(),
    )?;
    phis.par_iter()
        .map(|&phi| {
            let rates = DecayRates::new(config, phi)?;
            let tau_c_analytic = rates.coherence_time(&config.beam);
            let taus = fitting_tau_grid(config, tau_c_analytic, SWEEP_DECAY_POINTS);
            let curve = simulate_decay(config, phi, &taus, Engine::ClosedForm)?;
            let fit = fit_coherence_time(&curve)?;
            Ok(SweepPoint {
                phi,
                fit,
                tau_c_analytic,
                tau_c_uncorrelated: rates.coherence_time(&uncorrelated),
            })
        })
        .collect()
}

/// Angle of the longest fitted coherence time (first on ties).
pub fn sweep_argmax(points: &[SweepPoint]) -> Option<&SweepPoint> {
    points
        .iter()
        .fold(None, |best: Option<&SweepPoint>, p| match best {
            Some(b) if b.fit.tau_c >= p.fit.tau_c => Some(b),
            _ => Some(p),
        })
}

/// Dephasing time m/(2|q|σ_p) of a grating with wavevector `q_long` in a
/// beam of rms momentum width `sigma_p`.
pub fn dephasing_time_estimate(q_long: f64, sigma_p: f64, constants: &Constants) -> Result<f64> {
    ensure_positive("q_long", q_long)?;
    ensure_positive("sigma_p", sigma_p)?;
    Ok(constants.atom_mass() / (2.0 * q_long * sigma_p))
}

/// Upper bound (2Ωkσ_T cos φ)⁻¹ on the coherence time set by radial phase
/// matching in the transverse ground state.
pub fn transverse_bound(config: &ScenarioConfig, phi: f64) -> Result<f64> {
    check_phi(phi)?;
    let cos = phi.cos();
    if cos <= 1e-12 {
        return Err(Error::Domain(format!(
            "transverse bound requires |φ| < π/2 (cos φ = {cos:.3e})"
        )));
    }
    let sigma_t = config.guide.transverse_width(&config.constants);
    Ok(1.0 / (2.0 * config.guide.orbital_freq() * config.constants.wavenumber() * sigma_t * cos))
}
