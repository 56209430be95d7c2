//! Lyapunov exponents, the critical gain of the `tanh` baseline, and
//! forgetting-curve fits.

pub mod critical;
pub mod decay;
pub mod lyapunov;

pub use critical::{solve_critical_b, CriticalPoint};
pub use decay::{
    classify_decay, fit_exponential, fit_power_law, loglog_curvature, DecayFit, DecayLaw,
    DistanceSeries,
};
pub use lyapunov::{
    lyapunov_derivative_product, lyapunov_renormalized, LyapunovEstimate, LyapunovMethod,
};
