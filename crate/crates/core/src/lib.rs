//! Simulation and analysis of bichromatic superradiant pump-probe
//! spectroscopy on an atom beam guided around a ring.
//!
//! * [`units`]: constants, guide parameters, scenario configuration.
//! * [`wigner`]: Gaussian and sampled Wigner functions, projections, moments.
//! * [`kinematics`]: recoil geometry in the rotating frame, ballistic
//!   propagation, scattered-fraction readout.
//! * [`engine`]: pump-probe decay signal (closed form and quadrature),
//!   dephasing and transverse time scales.
//! * [`fit`]: Gaussian decay fits.
//! * [`tomography`]: filtered back-projection and parameter inference.

pub mod engine;
pub mod error;
pub mod fit;
pub mod kinematics;
pub mod tomography;
pub mod units;
pub mod wigner;

pub use error::{Error, Result};
