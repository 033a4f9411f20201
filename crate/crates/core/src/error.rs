use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("cannot convert {from} to {to}: incompatible dimensions")]
    IncompatibleUnits { from: String, to: String },

    #[error("small-rotation approximation violated: Ωτ = {omega_tau:.4} (limit {limit})")]
    SmallRotation { omega_tau: f64, limit: f64 },

    #[error("outside model domain: {0}")]
    Domain(String),

    #[error("grid extent too small: integral deficit {deficit:.3e} exceeds {limit:.0e}")]
    InsufficientExtent { deficit: f64, limit: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error(
        "phase oscillation under-resolved: frequency × step = {product:.3} ≥ π/4; \
         need at least {required_points} points per axis"
    )]
    UnderResolved {
        product: f64,
        required_points: usize,
    },

    #[error(
        "fit did not converge after {iterations} iterations (residual rms {residual_rms:.3e})"
    )]
    FitNotConverged {
        iterations: usize,
        residual_rms: f64,
    },

    #[error("insufficient decay: signal never drops below {threshold} of its peak (min ratio {min_ratio:.3})")]
    InsufficientDecay { min_ratio: f64, threshold: f64 },

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("parameter not identifiable: {0}")]
    Unidentifiable(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Rejects non-finite or non-positive values.
pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("must be finite, got {value}")))
    }
}
