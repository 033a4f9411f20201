//! Gaussian decay fits, Γ(τ) = Γ₀·exp(−τ²/τ_c²), by damped Gauss-Newton
//! (Levenberg-Marquardt) on the two parameters.

use crate::engine::DecayCurve;
use crate::error::{Error, Result};

pub const MIN_FIT_SAMPLES: usize = 4;
/// A curve whose smallest sample stays above this fraction of its peak is
/// rejected as not decaying.
pub const DECAY_THRESHOLD: f64 = 0.9;
pub const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceFit {
    /// 1/e time of the fitted Gaussian (s).
    pub tau_c: f64,
    /// One-sigma uncertainty of τ_c from the fit covariance (s).
    pub tau_c_err: f64,
    pub amplitude: f64,
    pub amplitude_err: f64,
    /// Root-mean-square unweighted residual.
    pub residual_rms: f64,
    pub iterations: usize,
}

/// Least-squares Gaussian fit of a decay curve.
///
/// Starts from Γ₀ = first sample and τ_c at the first e⁻¹·Γ₀ crossing
/// (linear interpolation). Per-sample `sigma_gamma`, when all present, are
/// used as absolute uncertainties; otherwise residual variance scales the
/// covariance.
pub fn fit_coherence_time(curve: &DecayCurve) -> Result<CoherenceFit> {
    let samples = curve.samples();
    let n = samples.len();
    if n < MIN_FIT_SAMPLES {
        return Err(Error::invalid(
            "decay curve",
            format!("need at least {MIN_FIT_SAMPLES} samples to fit, got {n}"),
        ));
    }
    let taus: Vec<f64> = samples.iter().map(|s| s.tau).collect();
    let gammas: Vec<f64> = samples.iter().map(|s| s.gamma).collect();
    let absolute_sigma = samples.iter().all(|s| s.sigma_gamma.is_some());
    let weights: Vec<f64> = samples
        .iter()
        .map(|s| match s.sigma_gamma {
            Some(sig) if absolute_sigma => 1.0 / (sig * sig),
            _ => 1.0,
        })
        .collect();

    let peak = gammas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if peak <= 0.0 {
        return Err(Error::invalid("decay curve", "no positive signal"));
    }
    let min_ratio = gammas.iter().cloned().fold(f64::INFINITY, f64::min) / peak;
    if min_ratio >= DECAY_THRESHOLD {
        return Err(Error::InsufficientDecay {
            min_ratio,
            threshold: DECAY_THRESHOLD,
        });
    }

    let (amp0, tc0) = initial_guess(&taus, &gammas, peak);
    // Work in units of the initial guesses so both parameters are O(1).
    let t: Vec<f64> = taus.iter().map(|x| x / tc0).collect();
    let y: Vec<f64> = gammas.iter().map(|g| g / amp0).collect();

    let model = |a: f64, c: f64, ti: f64| a * (-(ti / c).powi(2)).exp();
    let cost = |a: f64, c: f64| -> f64 {
        t.iter()
            .zip(&y)
            .zip(&weights)
            .map(|((&ti, &yi), &wi)| wi * (yi - model(a, c, ti)).powi(2))
            .sum()
    };

    let (mut a, mut c) = (1.0, 1.0);
    let mut current = cost(a, c);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        // normal equations JᵀWJ δ = JᵀW r
        let (mut h11, mut h12, mut h22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((&ti, &yi), &wi) in t.iter().zip(&y).zip(&weights) {
            let e = (-(ti / c).powi(2)).exp();
            let j1 = e;
            let j2 = a * e * 2.0 * ti * ti / (c * c * c);
            let r = yi - a * e;
            h11 += wi * j1 * j1;
            h12 += wi * j1 * j2;
            h22 += wi * j2 * j2;
            g1 += wi * j1 * r;
            g2 += wi * j2 * r;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let d11 = h11 * (1.0 + lambda);
            let d22 = h22 * (1.0 + lambda);
            let det = d11 * d22 - h12 * h12;
            if det > 0.0 && det.is_finite() {
                let da = (d22 * g1 - h12 * g2) / det;
                let dc = (d11 * g2 - h12 * g1) / det;
                let (na, nc) = (a + da, c + dc);
                if nc > 0.0 {
                    let trial = cost(na, nc);
                    if trial <= current {
                        let small =
                            da.abs() <= 1e-13 * na.abs().max(1e-300) && dc.abs() <= 1e-13 * nc;
                        let stalled = current - trial <= 1e-15 * current;
                        a = na;
                        c = nc;
                        current = trial;
                        lambda = (lambda * 0.1).max(1e-12);
                        accepted = true;
                        if small || (stalled && dc.abs() <= 1e-10 * nc) {
                            converged = true;
                        }
                        break;
                    }
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no descent direction left: numerically at the minimum
            converged = true;
        }
        if converged {
            break;
        }
    }

    let residual_rms = (t
        .iter()
        .zip(&y)
        .map(|(&ti, &yi)| (yi - model(a, c, ti)).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt()
        * amp0.abs();
    if !converged || !a.is_finite() || !c.is_finite() || c <= 0.0 {
        return Err(Error::FitNotConverged {
            iterations,
            residual_rms,
        });
    }

    // covariance at the solution
    let (mut h11, mut h12, mut h22) = (0.0, 0.0, 0.0);
    for (&ti, &wi) in t.iter().zip(&weights) {
        let e = (-(ti / c).powi(2)).exp();
        let j1 = e;
        let j2 = a * e * 2.0 * ti * ti / (c * c * c);
        h11 += wi * j1 * j1;
        h12 += wi * j1 * j2;
        h22 += wi * j2 * j2;
    }
    let det = h11 * h22 - h12 * h12;
    let scale = if absolute_sigma {
        // weights were built from unscaled σ; convert to the y/amp0 units
        1.0 / (amp0 * amp0)
    } else {
        current / (n - 2) as f64
    };
    let (var_a, var_c) = if det > 0.0 {
        (scale * h22 / det, scale * h11 / det)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };

    Ok(CoherenceFit {
        tau_c: c * tc0,
        tau_c_err: var_c.sqrt() * tc0,
        amplitude: a * amp0,
        amplitude_err: var_a.sqrt() * amp0.abs(),
        residual_rms,
        iterations,
    })
}

fn initial_guess(taus: &[f64], gammas: &[f64], peak: f64) -> (f64, f64) {
    let amp0 = if gammas[0] > 0.0 { gammas[0] } else { peak };
    let level = amp0 / std::f64::consts::E;
    for i in 1..gammas.len() {
        if gammas[i] <= level && gammas[i - 1] > level {
            let frac = (gammas[i - 1] - level) / (gammas[i - 1] - gammas[i]);
            let tc = taus[i - 1] + frac * (taus[i] - taus[i - 1]);
            if tc > 0.0 {
                return (amp0, tc);
            }
        }
    }
    // no crossing: invert the Gaussian at the most decayed positive sample
    let mut best: Option<f64> = None;
    for (&t, &g) in taus.iter().zip(gammas) {
        if t > 0.0 && g > 0.0 && g < amp0 {
            best = Some(t / (amp0 / g).ln().sqrt());
        }
    }
    let span = taus[taus.len() - 1] - taus[0];
    (amp0, best.unwrap_or(span.max(f64::MIN_POSITIVE)))
}
