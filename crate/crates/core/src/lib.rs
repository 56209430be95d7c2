//! Numerical laboratory for critical echo state networks.
//!
//! Each neuron's transfer function is morphed so that its epi-critical
//! points (ECPs), where the slope is exactly one, sit on predicted linear
//! responses. The crate covers:
//!
//! - [`transfer`]: construction and validation of morphable transfer functions,
//! - [`reservoir`]: reservoir dynamics, orthogonal weights, one-neuron presets,
//! - [`signals`]: seeded input generators,
//! - [`analysis`]: Lyapunov estimators, the critical-gain solver, decay fitting,
//! - [`readout`]: ridge-regression readout.

pub mod analysis;
pub mod error;
pub mod format;
pub mod readout;
pub mod reservoir;
pub mod rng;
pub mod signals;
pub mod transfer;

pub use error::{Error, Result};
