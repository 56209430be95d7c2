//! Critical gain of the one-neuron `tanh` network `x_t = tanh(-b x_{t-1} + u_t)`
//! under `u_t = A (-1)^t`.
//!
//! The period-2 orbit is `x_t = -(-1)^t s` with
//!
//! ```text
//! s = tanh(b s - A),    b (1 - s²) = 1
//! ```
//!
//! where the second equation makes the per-step tangent magnitude one.
//! Eliminating `b = 1/(1 - s²)` leaves a scalar root in `s ∈ (0, 1)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::format;

/// Residual bound required of a solution.
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;
const SCAN_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub amplitude: f64,
    pub b_star: f64,
    /// Orbit amplitude.
    pub s_star: f64,
    /// `(tanh(b s - A) - s, b (1 - s²) - 1)`.
    pub residuals: (f64, f64),
}

impl CriticalPoint {
    pub const CSV_HEADER: &'static str = "amplitude,b_star,s_star,residual_orbit,residual_slope";

    /// State before step 0 that puts the network on the orbit for an input
    /// series whose first element is `first_input`.
    pub fn orbit_state(&self, first_input: f64) -> f64 {
        if first_input == 0.0 {
            0.0
        } else {
            self.s_star * first_input.signum()
        }
    }

    pub fn csv_row(&self) -> String {
        format::float_list(
            &[
                self.amplitude,
                self.b_star,
                self.s_star,
                self.residuals.0,
                self.residuals.1,
            ],
            ",",
        )
    }
}

impl fmt::Display for CriticalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "amplitude       {}", format::float(self.amplitude))?;
        writeln!(f, "b_star          {}", format::float(self.b_star))?;
        writeln!(f, "s_star          {}", format::float(self.s_star))?;
        writeln!(f, "residual_orbit  {}", format::float(self.residuals.0))?;
        writeln!(f, "residual_slope  {}", format::float(self.residuals.1))
    }
}

fn gain(s: f64) -> f64 {
    1.0 / (1.0 - s * s)
}

fn orbit_residual(s: f64, amplitude: f64) -> f64 {
    (gain(s) * s - amplitude).tanh() - s
}

/// Scans `s` on a 10⁴-point grid for the first sign change of the orbit
/// residual, then bisects it to machine precision.
pub fn solve_critical_b(amplitude: f64) -> Result<CriticalPoint> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "amplitude {amplitude} must be > 0"
        )));
    }
    let g = |s: f64| orbit_residual(s, amplitude);
    let step = 1.0 / SCAN_POINTS as f64;
    let mut lo = 0.0;
    let mut g_lo = g(lo);
    let mut bracket = None;
    for i in 1..SCAN_POINTS {
        let hi = i as f64 * step;
        let g_hi = g(hi);
        if g_hi == 0.0 {
            bracket = Some((hi, hi));
            break;
        }
        if g_lo.signum() != g_hi.signum() {
            bracket = Some((lo, hi));
            break;
        }
        lo = hi;
        g_lo = g_hi;
    }
    let (mut lo, mut hi) = bracket
        .ok_or_else(|| Error::NoRoot(format!("no period-2 orbit for amplitude {amplitude}")))?;
    let sign_lo = g(lo).signum();
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid).signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = if g(lo).abs() <= g(hi).abs() { lo } else { hi };
    let b = gain(s);
    let residuals = (g(s), b * (1.0 - s * s) - 1.0);
    let worst = residuals.0.abs().max(residuals.1.abs());
    if worst >= RESIDUAL_TOLERANCE {
        return Err(Error::Residual {
            residual: worst,
            tolerance: RESIDUAL_TOLERANCE,
        });
    }
    Ok(CriticalPoint {
        amplitude,
        b_star: b,
        s_star: s,
        residuals,
    })
}
