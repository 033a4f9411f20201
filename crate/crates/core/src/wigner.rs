//! Wigner-function representations of a longitudinal beam state.
//!
//! Tomography works in normalized phase-space coordinates x̃ = x/σ_x and
//! p̃ = p/σ_p. A projection at angle θ integrates 𝒲 along lines of constant
//!
//! ```text
//! s = p̃ cos θ + x̃ sin θ
//! ```
//!
//! so θ = 0 gives the momentum marginal and θ = π/2 the spatial marginal.
//! For the correlated Gaussian this makes the projected variance
//! `1 + η sin 2θ`, widest at θ = π/4 and narrowest at θ = 3π/4 when η > 0.

use std::f64::consts::{PI, TAU};

use log::warn;
use rayon::prelude::*;

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::units::Constants;

/// Largest |η| accepted by [`CorrelatedGaussianState::new_capped`].
pub const ETA_CAP: f64 = 1.0 - 1e-9;

/// Integral deficit above which a sampled grid is considered truncated.
pub const EXTENT_DEFICIT_LIMIT: f64 = 1e-3;

pub const MIN_GRID_POINTS: usize = 16;
pub const MIN_HALF_WIDTH: f64 = 4.0;

/// Gaussian beam state with position-momentum correlation η = ⟨px⟩/σ_xσ_p.
///
/// Positive η means momentum grows with position along the beam, i.e. an
/// outward velocity chirp as produced by free expansion.
///
/// The complement 1 − η² is carried alongside η so that states with η a few
/// ulps from 1 keep an accurate phase-space area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatedGaussianState {
    sigma_x: f64,
    sigma_p: f64,
    eta: f64,
    decorrelation: f64,
    atom_number: f64,
    mean_x: f64,
    mean_p: f64,
    timestamp: f64,
}

impl CorrelatedGaussianState {
    /// Strict constructor: requires −1 < η < 1.
    pub fn new(sigma_x: f64, sigma_p: f64, eta: f64, atom_number: f64) -> Result<Self> {
        ensure_finite("eta", eta)?;
        if eta.abs() >= 1.0 {
            return Err(Error::invalid("eta", format!("|η| must be < 1, got {eta}")));
        }
        Self::from_parts(
            sigma_x,
            sigma_p,
            eta,
            (1.0 - eta) * (1.0 + eta),
            atom_number,
        )
    }

    /// Builds a state from 1 − η, which is exact for strongly chirped beams.
    pub fn with_one_minus_eta(
        sigma_x: f64,
        sigma_p: f64,
        one_minus_eta: f64,
        atom_number: f64,
    ) -> Result<Self> {
        ensure_finite("one_minus_eta", one_minus_eta)?;
        if one_minus_eta <= 0.0 || one_minus_eta >= 2.0 {
            return Err(Error::invalid(
                "one_minus_eta",
                format!("must lie in (0, 2), got {one_minus_eta}"),
            ));
        }
        let eta = 1.0 - one_minus_eta;
        Self::from_parts(
            sigma_x,
            sigma_p,
            eta,
            one_minus_eta * (2.0 - one_minus_eta),
            atom_number,
        )
    }

    /// Ingestion constructor: |η| beyond [`ETA_CAP`] (including |η| ≥ 1) is
    /// clamped to the cap with a warning instead of being rejected.
    pub fn new_capped(sigma_x: f64, sigma_p: f64, eta: f64, atom_number: f64) -> Result<Self> {
        ensure_finite("eta", eta)?;
        if eta.abs() > ETA_CAP {
            let capped = ETA_CAP.copysign(eta);
            warn!("η = {eta} is outside ±{ETA_CAP}; capped to {capped}");
            return Self::with_one_minus_eta(sigma_x, sigma_p, 1.0 - capped, atom_number);
        }
        Self::new(sigma_x, sigma_p, eta, atom_number)
    }

    fn from_parts(
        sigma_x: f64,
        sigma_p: f64,
        eta: f64,
        decorrelation: f64,
        atom_number: f64,
    ) -> Result<Self> {
        ensure_positive("sigma_x", sigma_x)?;
        ensure_positive("sigma_p", sigma_p)?;
        ensure_positive("atom_number", atom_number)?;
        Ok(Self {
            sigma_x,
            sigma_p,
            eta,
            decorrelation,
            atom_number,
            mean_x: 0.0,
            mean_p: 0.0,
            timestamp: 0.0,
        })
    }

    pub fn with_mean(mut self, mean_x: f64, mean_p: f64) -> Result<Self> {
        self.mean_x = ensure_finite("mean_x", mean_x)?;
        self.mean_p = ensure_finite("mean_p", mean_p)?;
        Ok(self)
    }

    pub fn with_timestamp(mut self, timestamp: f64) -> Result<Self> {
        self.timestamp = ensure_finite("timestamp", timestamp)?;
        Ok(self)
    }

    /// Internal constructor for propagated states; inputs already validated.
    pub(crate) fn evolved(
        &self,
        sigma_x: f64,
        eta: f64,
        decorrelation: f64,
        mean_x: f64,
        timestamp: f64,
    ) -> Self {
        Self {
            sigma_x,
            eta,
            decorrelation,
            mean_x,
            timestamp,
            ..*self
        }
    }

    pub fn sigma_x(&self) -> f64 {
        self.sigma_x
    }

    pub fn sigma_p(&self) -> f64 {
        self.sigma_p
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// 1 − η², carried to full relative precision.
    pub fn decorrelation(&self) -> f64 {
        self.decorrelation
    }

    /// 1 − η, accurate even when η is within a few ulps of 1.
    pub fn one_minus_eta(&self) -> f64 {
        if self.eta > 0.0 {
            self.decorrelation / (1.0 + self.eta)
        } else {
            1.0 - self.eta
        }
    }

    /// 1 + η, accurate when η is close to −1.
    pub fn one_plus_eta(&self) -> f64 {
        if self.eta < 0.0 {
            self.decorrelation / (1.0 - self.eta)
        } else {
            1.0 + self.eta
        }
    }

    pub fn atom_number(&self) -> f64 {
        self.atom_number
    }

    pub fn mean_x(&self) -> f64 {
        self.mean_x
    }

    pub fn mean_p(&self) -> f64 {
        self.mean_p
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    /// ⟨px⟩ − ⟨p⟩⟨x⟩ in SI units.
    pub fn covariance(&self) -> f64 {
        self.eta * self.sigma_x * self.sigma_p
    }

    /// u² + 2η·u·v + v², evaluated without cancellation near |η| = 1.
    pub fn quadratic_form(&self, u: f64, v: f64) -> f64 {
        if self.eta >= 0.0 {
            (u + v).powi(2) - 2.0 * self.one_minus_eta() * u * v
        } else {
            (u - v).powi(2) + 2.0 * self.one_plus_eta() * u * v
        }
    }

    /// Value of 𝒲(x, p) in 1/(m·kg·m/s).
    pub fn evaluate(&self, x: f64, p: f64) -> Result<f64> {
        ensure_finite("x", x)?;
        ensure_finite("p", p)?;
        let xt = (x - self.mean_x) / self.sigma_x;
        let pt = (p - self.mean_p) / self.sigma_p;
        Ok(self.normalized_density(xt, pt) / (self.sigma_x * self.sigma_p))
    }

    /// Density per unit normalized area dx̃ dp̃, with x̃ = x/σ_x, p̃ = p/σ_p
    /// measured from the mean.
    pub fn normalized_density(&self, xt: f64, pt: f64) -> f64 {
        let d = self.decorrelation;
        // x̃² − 2η x̃ p̃ + p̃²
        let q = self.quadratic_form(xt, -pt);
        (-q / (2.0 * d)).exp() / (TAU * d.sqrt())
    }

    /// |characteristic function|² at normalized wavevector (k_x̃, k_p̃):
    /// |∫∫ exp(i(k_x̃ x̃ + k_p̃ p̃)) 𝒲 dx̃ dp̃|².
    pub fn characteristic_modulus_sq(&self, kx: f64, kp: f64) -> f64 {
        (-self.quadratic_form(kx, kp)).exp()
    }

    /// Occupied phase-space area σ_xσ_p√(1−η²) in units of ħ.
    pub fn phase_space_area(&self, constants: &Constants) -> f64 {
        self.max_phase_space_area(constants) * self.decorrelation.sqrt()
    }

    /// Upper bound σ_xσ_p in units of ħ, ignoring correlations.
    pub fn max_phase_space_area(&self, constants: &Constants) -> f64 {
        self.sigma_x * self.sigma_p / constants.hbar()
    }

    /// Momentum spread at fixed position, 𝒜/σ_x in kg·m/s.
    pub fn homogeneous_momentum_width(&self) -> f64 {
        self.sigma_p * self.decorrelation.sqrt()
    }

    /// Analytic rms width of the projection at angle θ (normalized units).
    pub fn projection_width(&self, theta: f64) -> f64 {
        let s = (2.0 * theta).sin();
        let var = if self.eta * s >= 0.0 {
            1.0 + self.eta * s
        } else if self.eta > 0.0 {
            (1.0 + s) + (-s) * self.one_minus_eta()
        } else {
            (1.0 - s) + s * self.one_plus_eta()
        };
        var.sqrt()
    }

    /// Mean of the projection coordinate s at angle θ.
    pub fn projection_mean(&self, theta: f64) -> f64 {
        (self.mean_p / self.sigma_p) * theta.cos() + (self.mean_x / self.sigma_x) * theta.sin()
    }

    /// Analytic projection sampled on the supplied s axis.
    pub fn project_on(&self, theta: f64, s_axis: &[f64]) -> Result<ProjectionProfile> {
        ensure_finite("theta", theta)?;
        let w = self.projection_width(theta);
        let mu = self.projection_mean(theta);
        let norm = 1.0 / ((TAU).sqrt() * w);
        let density = s_axis
            .iter()
            .map(|&s| norm * (-(s - mu).powi(2) / (2.0 * w * w)).exp())
            .collect();
        ProjectionProfile::new(theta, s_axis.to_vec(), density)
    }
}

/// Anything whose Radon projection can be taken at an angle θ.
pub trait Projectable {
    fn project(&self, theta: f64) -> Result<ProjectionProfile>;
}

impl Projectable for CorrelatedGaussianState {
    /// Samples the analytic projection on 513 points spanning ±8 widths.
    fn project(&self, theta: f64) -> Result<ProjectionProfile> {
        ensure_finite("theta", theta)?;
        let w = self.projection_width(theta);
        let mu = self.projection_mean(theta);
        let axis = linspace(mu - 8.0 * w, mu + 8.0 * w, 513);
        self.project_on(theta, &axis)
    }
}

/// One tomogram: density of s = p̃ cos θ + x̃ sin θ.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionProfile {
    theta: f64,
    s: Vec<f64>,
    density: Vec<f64>,
    mean: f64,
    rms_width: f64,
}

impl ProjectionProfile {
    /// Validates the samples and computes trapezoidal moments. Negative
    /// densities below 1e-9 of the peak are rejected; smaller ones are
    /// rounding noise and clamped to zero.
    pub fn new(theta: f64, s: Vec<f64>, mut density: Vec<f64>) -> Result<Self> {
        ensure_finite("theta", theta)?;
        if s.len() != density.len() {
            return Err(Error::invalid(
                "profile",
                format!("{} s values but {} densities", s.len(), density.len()),
            ));
        }
        if s.len() < 2 {
            return Err(Error::invalid("profile", "need at least 2 samples"));
        }
        if s.iter().chain(density.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("profile", "non-finite sample"));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("profile", "s must be strictly increasing"));
        }
        let peak = density.iter().cloned().fold(0.0, f64::max);
        if peak <= 0.0 {
            return Err(Error::invalid("profile", "density has no positive samples"));
        }
        if density.iter().any(|&d| d < -1e-9 * peak) {
            return Err(Error::invalid("profile", "density must be non-negative"));
        }
        for d in density.iter_mut() {
            *d = d.max(0.0);
        }
        let norm = trapezoid_nonuniform(&s, |i| density[i]);
        let mean = trapezoid_nonuniform(&s, |i| s[i] * density[i]) / norm;
        let var = trapezoid_nonuniform(&s, |i| (s[i] - mean).powi(2) * density[i]) / norm;
        Ok(Self {
            theta,
            s,
            density,
            mean,
            rms_width: var.sqrt(),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.s.iter().copied().zip(self.density.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Standard deviation of s under the profile.
    pub fn rms_width(&self) -> f64 {
        self.rms_width
    }

    pub fn integral(&self) -> f64 {
        trapezoid_nonuniform(&self.s, |i| self.density[i])
    }

    /// Profile under s → −s, i.e. the same tomogram seen at θ + π.
    pub fn mirrored(&self) -> Self {
        Self {
            theta: self.theta + PI,
            s: self.s.iter().rev().map(|v| -v).collect(),
            density: self.density.iter().rev().copied().collect(),
            mean: -self.mean,
            rms_width: self.rms_width,
        }
    }
}

/// Sampled Wigner function over the normalized square [−h, h]².
///
/// Values are densities per unit normalized area; index (i, j) holds
/// 𝒲(x̃_i, p̃_j) with x̃ along the first axis.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    values: Vec<f64>,
    n_x: usize,
    n_p: usize,
    half_width: f64,
    scale: (f64, f64),
}

/// Trapezoidal moments of a grid in normalized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMoments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub corr: f64,
}

impl WignerGrid {
    /// Samples a Gaussian state (to_grid). Coordinates are x/σ_x and p/σ_p,
    /// so a displaced state may fall partly off the grid, which is reported
    /// as [`Error::InsufficientExtent`].
    pub fn from_state(
        state: &CorrelatedGaussianState,
        n_x: usize,
        n_p: usize,
        half_width: f64,
    ) -> Result<Self> {
        check_shape(n_x, n_p, half_width)?;
        let xs = linspace(-half_width, half_width, n_x);
        let ps = linspace(-half_width, half_width, n_p);
        let mx = state.mean_x() / state.sigma_x();
        let mp = state.mean_p() / state.sigma_p();
        let mut values = vec![0.0; n_x * n_p];
        values
            .par_chunks_mut(n_p)
            .zip(xs.par_iter())
            .for_each(|(row, &x)| {
                for (v, &p) in row.iter_mut().zip(ps.iter()) {
                    *v = state.normalized_density(x - mx, p - mp);
                }
            });
        let grid = Self {
            values,
            n_x,
            n_p,
            half_width,
            scale: (state.sigma_x(), state.sigma_p()),
        };
        let deficit = 1.0 - grid.integral();
        if deficit > EXTENT_DEFICIT_LIMIT {
            return Err(Error::InsufficientExtent {
                deficit,
                limit: EXTENT_DEFICIT_LIMIT,
            });
        }
        Ok(grid)
    }

    /// Wraps externally produced samples (row-major, x̃ index outermost).
    pub fn from_values(
        values: Vec<f64>,
        n_x: usize,
        n_p: usize,
        half_width: f64,
        scale: (f64, f64),
    ) -> Result<Self> {
        check_shape(n_x, n_p, half_width)?;
        if values.len() != n_x * n_p {
            return Err(Error::invalid(
                "grid",
                format!("expected {} values, got {}", n_x * n_p, values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid", "non-finite value"));
        }
        ensure_positive("sigma_x scale", scale.0)?;
        ensure_positive("sigma_p scale", scale.1)?;
        Ok(Self {
            values,
            n_x,
            n_p,
            half_width,
            scale,
        })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// (σ_x, σ_p) used to normalize the axes.
    pub fn scale(&self) -> (f64, f64) {
        self.scale
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_p + j]
    }

    pub fn step_x(&self) -> f64 {
        2.0 * self.half_width / (self.n_x - 1) as f64
    }

    pub fn step_p(&self) -> f64 {
        2.0 * self.half_width / (self.n_p - 1) as f64
    }

    pub fn axis_x(&self) -> Vec<f64> {
        linspace(-self.half_width, self.half_width, self.n_x)
    }

    pub fn axis_p(&self) -> Vec<f64> {
        linspace(-self.half_width, self.half_width, self.n_p)
    }

    /// Trapezoidal weight of node (i, j), including the cell area.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let wx = if i == 0 || i == self.n_x - 1 {
            0.5
        } else {
            1.0
        };
        let wp = if j == 0 || j == self.n_p - 1 {
            0.5
        } else {
            1.0
        };
        wx * wp * self.step_x() * self.step_p()
    }

    /// Trapezoidal sum of `f(x̃, p̃, value)` over the grid.
    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(f64, f64, f64) -> f64,
    {
        let xs = self.axis_x();
        let ps = self.axis_p();
        let mut total = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let mut row = 0.0;
            for (j, &p) in ps.iter().enumerate() {
                let wp = if j == 0 || j == self.n_p - 1 {
                    0.5
                } else {
                    1.0
                };
                row += wp * f(x, p, self.value(i, j));
            }
            let wx = if i == 0 || i == self.n_x - 1 {
                0.5
            } else {
                1.0
            };
            total += wx * row;
        }
        total * self.step_x() * self.step_p()
    }

    pub fn integral(&self) -> f64 {
        self.integrate(|_, _, w| w)
    }

    /// Normalized first and second moments; the sums are divided by the
    /// grid integral so unnormalized grids are handled too.
    pub fn moments(&self) -> GridMoments {
        let norm = self.integral();
        let mean_x = self.integrate(|x, _, w| x * w) / norm;
        let mean_p = self.integrate(|_, p, w| p * w) / norm;
        let var_x = self.integrate(|x, _, w| (x - mean_x).powi(2) * w) / norm;
        let var_p = self.integrate(|_, p, w| (p - mean_p).powi(2) * w) / norm;
        let cov = self.integrate(|x, p, w| (x - mean_x) * (p - mean_p) * w) / norm;
        GridMoments {
            mean_x,
            mean_p,
            var_x,
            var_p,
            corr: cov / (var_x * var_p).sqrt(),
        }
    }

    /// Bilinear interpolation at normalized (x̃, p̃); zero outside the grid.
    pub fn sample(&self, x: f64, p: f64) -> f64 {
        let fx = (x + self.half_width) / self.step_x();
        let fp = (p + self.half_width) / self.step_p();
        let max_x = (self.n_x - 1) as f64;
        let max_p = (self.n_p - 1) as f64;
        if !(fx >= 0.0 && fp >= 0.0 && fx <= max_x && fp <= max_p) {
            return 0.0;
        }
        let i = (fx.floor() as usize).min(self.n_x - 2);
        let j = (fp.floor() as usize).min(self.n_p - 2);
        let tx = fx - i as f64;
        let tp = fp - j as f64;
        let v00 = self.value(i, j);
        let v10 = self.value(i + 1, j);
        let v01 = self.value(i, j + 1);
        let v11 = self.value(i + 1, j + 1);
        (1.0 - tx) * ((1.0 - tp) * v00 + tp * v01) + tx * ((1.0 - tp) * v10 + tp * v11)
    }

    /// Radon projection by rotate-then-sum: for each s, bilinear samples
    /// along the line {s·u + t·u⊥} are summed with trapezoidal weights, where
    /// u = (sin θ, cos θ) in (x̃, p̃). The s and t axes span ±√2·half_width at
    /// the grid step so every grid cell is seen at every angle.
    pub fn project(&self, theta: f64) -> Result<ProjectionProfile> {
        ensure_finite("theta", theta)?;
        let step = self.step_x().min(self.step_p());
        let reach = std::f64::consts::SQRT_2 * self.half_width;
        let half_count = (reach / step).ceil() as usize;
        let n_s = 2 * half_count + 1;
        let extent = half_count as f64 * step;
        let s_axis = linspace(-extent, extent, n_s);
        let (sin, cos) = theta.sin_cos();
        let density: Vec<f64> = s_axis
            .par_iter()
            .map(|&s| {
                let mut acc = 0.0;
                for (k, &t) in s_axis.iter().enumerate() {
                    let x = s * sin + t * cos;
                    let p = s * cos - t * sin;
                    let w = if k == 0 || k == n_s - 1 { 0.5 } else { 1.0 };
                    acc += w * self.sample(x, p);
                }
                acc * step
            })
            .collect();
        let profile = ProjectionProfile::new(theta, s_axis, density)?;
        if profile.rms_width() < step {
            return Err(Error::GridTooCoarse(format!(
                "projection rms width {:.3e} at θ = {theta:.4} is below the sampling step {step:.3e}",
                profile.rms_width()
            )));
        }
        Ok(profile)
    }
}

impl Projectable for WignerGrid {
    fn project(&self, theta: f64) -> Result<ProjectionProfile> {
        WignerGrid::project(self, theta)
    }
}

fn check_shape(n_x: usize, n_p: usize, half_width: f64) -> Result<()> {
    if n_x < MIN_GRID_POINTS || n_p < MIN_GRID_POINTS {
        return Err(Error::invalid(
            "grid size",
            format!("need at least {MIN_GRID_POINTS} points per axis, got {n_x}×{n_p}"),
        ));
    }
    if !half_width.is_finite() || half_width < MIN_HALF_WIDTH {
        return Err(Error::invalid(
            "half_width",
            format!("must be ≥ {MIN_HALF_WIDTH} (normalized units), got {half_width}"),
        ));
    }
    Ok(())
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
                .collect()
        }
    }
}

fn trapezoid_nonuniform(s: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    s.windows(2)
        .enumerate()
        .map(|(i, w)| 0.5 * (w[1] - w[0]) * (f(i) + f(i + 1)))
        .sum()
}
