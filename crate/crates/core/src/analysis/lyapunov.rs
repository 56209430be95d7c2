//! Largest Lyapunov exponent of a driven reservoir,
//!
//! ```text
//! Λ = lim (1/t) ln(‖y_t − x_t‖₂ / ‖y_0 − x_0‖₂)
//! ```
//!
//! estimated either by renormalized two-trajectory integration or, for one
//! neuron, as the mean of `ln|W θ'(y_lin,t)|` along the trajectory.

use std::fmt;

use crate::error::{Error, Result};
use crate::format;
use crate::reservoir::Reservoir;
use crate::rng::{self, streams};

pub const DEFAULT_D0: f64 = 1e-9;
pub const DEFAULT_WASHOUT: usize = 1000;
pub const DEFAULT_HORIZON: usize = 100_000;
/// Smallest number of post-washout steps accepted.
pub const MIN_STEPS: usize = 1000;
pub const BATCHES: usize = 20;
pub const D0_RANGE: (f64, f64) = (1e-12, 1e-6);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LyapunovMethod {
    Renormalized,
    DerivativeProduct,
}

impl fmt::Display for LyapunovMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LyapunovMethod::Renormalized => "renormalized",
            LyapunovMethod::DerivativeProduct => "derivative-product",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovEstimate {
    /// Nats per step; `-inf` when the two trajectories merged exactly.
    pub lambda: f64,
    pub method: LyapunovMethod,
    pub steps_used: usize,
    pub washout: usize,
    /// Initial separation; zero for the derivative product.
    pub d0: f64,
    /// Standard error from 20 batch means.
    pub stderr: f64,
}

impl LyapunovEstimate {
    pub const CSV_HEADER: &'static str = "method,lambda,stderr,steps_used,washout,d0";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.method,
            format::float(self.lambda),
            format::float(self.stderr),
            self.steps_used,
            self.washout,
            format::float(self.d0)
        )
    }

    pub fn report(&self) -> String {
        format!(
            "method     {}\nlambda     {}\nstderr     {}\nsteps_used {}\nwashout    {}\nd0         {}\n",
            self.method,
            format::float(self.lambda),
            format::float(self.stderr),
            self.steps_used,
            self.washout,
            format::float(self.d0)
        )
    }
}

fn check_length(inputs: &[f64], washout: usize) -> Result<()> {
    let need = washout + MIN_STEPS;
    if inputs.len() < need {
        return Err(Error::InputTooShort {
            need,
            got: inputs.len(),
        });
    }
    Ok(())
}

/// Mean and batch-mean standard error.
fn summarize(logs: &[f64]) -> (f64, f64) {
    let n = logs.len();
    let mean = logs.iter().sum::<f64>() / n as f64;
    if !mean.is_finite() {
        return (mean, 0.0);
    }
    let size = n / BATCHES;
    let means: Vec<f64> = logs
        .chunks_exact(size)
        .take(BATCHES)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let m = means.iter().sum::<f64>() / BATCHES as f64;
    let var = means.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    (mean, (var / BATCHES as f64).sqrt())
}

/// Benettin estimate starting from the reservoir's current state.
///
/// The companion starts `d0` away along a random unit direction drawn from
/// `seed`. After every step the log growth `ln(d_t/d0)` is recorded and the
/// companion is pulled back to distance `d0` along the current difference.
/// Steps inside the washout are renormalized but not averaged.
pub fn lyapunov_renormalized(
    reservoir: &Reservoir,
    inputs: &[f64],
    d0: f64,
    washout: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    check_length(inputs, washout)?;
    if !(D0_RANGE.0..=D0_RANGE.1).contains(&d0) {
        return Err(Error::InvalidParameter(format!(
            "d0 {d0:e} outside [{:e}, {:e}]",
            D0_RANGE.0, D0_RANGE.1
        )));
    }
    let k = reservoir.k();
    let mut rng = rng::stream(seed, streams::DIRECTION);
    let direction = loop {
        let v: Vec<f64> = (0..k).map(|_| rng::standard_normal(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            break v.into_iter().map(|x| x / norm).collect::<Vec<_>>();
        }
    };

    let mut reference = reservoir.clone();
    let mut companion = reservoir.clone();
    let mut buf: Vec<f64> = reference
        .state()
        .iter()
        .zip(&direction)
        .map(|(x, v)| x + d0 * v)
        .collect();
    companion.set_state(&buf)?;

    let steps = inputs.len() - washout;
    let mut logs = Vec::with_capacity(steps);
    let mut collapsed = false;
    for (t, &u) in inputs.iter().enumerate() {
        reference.advance_scalar(u, t as u64)?;
        companion.advance_scalar(u, t as u64)?;
        let d = reference
            .state()
            .iter()
            .zip(companion.state())
            .map(|(a, b)| (b - a).powi(2))
            .sum::<f64>()
            .sqrt();
        if d == 0.0 {
            collapsed = true;
            break;
        }
        if t >= washout {
            logs.push((d / d0).ln());
        }
        let scale = d0 / d;
        for ((b, &x), &y) in buf.iter_mut().zip(reference.state()).zip(companion.state()) {
            *b = x + (y - x) * scale;
        }
        companion.set_state(&buf)?;
    }

    let (lambda, stderr) = if collapsed {
        (f64::NEG_INFINITY, 0.0)
    } else {
        summarize(&logs)
    };
    Ok(LyapunovEstimate {
        lambda,
        method: LyapunovMethod::Renormalized,
        steps_used: steps,
        washout,
        d0,
        stderr,
    })
}

/// Exact tangent average `mean ln|W θ'(y_lin,t)|` for a one-neuron
/// reservoir, starting from its current state.
pub fn lyapunov_derivative_product(
    reservoir: &Reservoir,
    inputs: &[f64],
    washout: usize,
) -> Result<LyapunovEstimate> {
    if reservoir.k() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: reservoir.k(),
        });
    }
    check_length(inputs, washout)?;
    let mut r = reservoir.clone();
    let w = r.weights()[(0, 0)];
    let mut logs = Vec::with_capacity(inputs.len() - washout);
    for (t, &u) in inputs.iter().enumerate() {
        r.advance_scalar(u, t as u64)?;
        if t >= washout {
            let slope = r.activation(0).slope(r.linear_response()[0]);
            logs.push((w * slope).abs().ln());
        }
    }
    let (lambda, stderr) = summarize(&logs);
    Ok(LyapunovEstimate {
        lambda,
        method: LyapunovMethod::DerivativeProduct,
        steps_used: logs.len(),
        washout,
        d0: 0.0,
        stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reservoir::{EcpNeuronConfig, TanhNeuronConfig};
    use crate::signals::InputSequence;

    fn alternating(len: usize) -> Vec<f64> {
        InputSequence::alternating(1.0, len).generate().unwrap()
    }

    fn on_orbit(alpha: f64) -> Reservoir {
        let mut r = Reservoir::ecp_neuron(&EcpNeuronConfig::new(alpha)).unwrap();
        r.set_state(&[EcpNeuronConfig::orbit_state(1.0)]).unwrap();
        r
    }

    #[test]
    fn derivative_product_is_zero_at_alpha_one() {
        let est = lyapunov_derivative_product(&on_orbit(1.0), &alternating(3000), 1000).unwrap();
        assert_eq!(est.lambda, 0.0);
        assert_eq!(est.steps_used, 2000);
    }

    #[test]
    fn derivative_product_is_ln_alpha_on_orbit() {
        for alpha in [0.25, 0.5, 0.75, 1.2] {
            let est =
                lyapunov_derivative_product(&on_orbit(alpha), &alternating(3000), 1000).unwrap();
            assert!((est.lambda - alpha.ln()).abs() < 1e-12, "alpha {alpha}");
        }
    }

    #[test]
    fn renormalized_matches_contraction_rate() {
        let est =
            lyapunov_renormalized(&on_orbit(0.5), &alternating(20_000), 1e-9, 1000, 7).unwrap();
        assert!((est.lambda - 0.5f64.ln()).abs() < 1e-3, "{}", est.lambda);
        assert!(est.stderr < 1e-3);
    }

    #[test]
    fn renormalized_is_deterministic() {
        let inputs = InputSequence::iid(1.0, 3, 5000).generate().unwrap();
        let a = lyapunov_renormalized(&on_orbit(0.9), &inputs, 1e-9, 1000, 11).unwrap();
        let b = lyapunov_renormalized(&on_orbit(0.9), &inputs, 1e-9, 1000, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn preconditions() {
        let r = on_orbit(1.0);
        assert!(matches!(
            lyapunov_renormalized(&r, &alternating(1500), 1e-9, 1000, 0),
            Err(Error::InputTooShort {
                need: 2000,
                got: 1500
            })
        ));
        assert!(lyapunov_renormalized(&r, &alternating(3000), 1e-3, 1000, 0).is_err());
        assert!(lyapunov_renormalized(&r, &alternating(3000), 1e-13, 1000, 0).is_err());
        let cfg = crate::reservoir::RandomConfig {
            k: 3,
            seed: 1,
            ecps: crate::transfer::EcpList::unit_pair(),
            variant: crate::transfer::Variant::Bridge,
            amplitude: 1.0,
        };
        let big = Reservoir::random(&cfg).unwrap();
        assert!(lyapunov_derivative_product(&big, &alternating(3000), 1000).is_err());
    }

    #[test]
    fn plateau_collapse_gives_negative_infinity() {
        let mut cfg = EcpNeuronConfig::new(0.5);
        cfg.variant = crate::transfer::Variant::Plateau;
        let r = Reservoir::ecp_neuron(&cfg).unwrap();
        // Fixed point with y_lin = 0.5, inside the flat piece between 0 and 1.
        let level = 0.5 * 1f64.tanh();
        let inputs = vec![(0.5 + 0.5 * level) / cfg.input_weight(); 3000];
        let est = lyapunov_renormalized(&r, &inputs, 1e-9, 1000, 0).unwrap();
        assert_eq!(est.lambda, f64::NEG_INFINITY);
    }

    #[test]
    fn tanh_neuron_tanh_is_neutral_at_critical_gain() {
        let cp = crate::analysis::solve_critical_b(std::f64::consts::FRAC_PI_4).unwrap();
        let mut r = Reservoir::tanh_neuron(&TanhNeuronConfig::new(cp.b_star)).unwrap();
        r.set_state(&[cp.orbit_state(1.0)]).unwrap();
        let inputs = InputSequence::alternating(std::f64::consts::FRAC_PI_4, 5000)
            .generate()
            .unwrap();
        let est = lyapunov_derivative_product(&r, &inputs, 1000).unwrap();
        assert!(est.lambda.abs() <= 1e-3, "{}", est.lambda);
    }

    #[test]
    fn serialization() {
        let est = lyapunov_derivative_product(&on_orbit(0.5), &alternating(2000), 1000).unwrap();
        let row = est.csv_row();
        assert_eq!(
            row.split(',').count(),
            LyapunovEstimate::CSV_HEADER.split(',').count()
        );
        assert!(row.starts_with("derivative-product,"));
        assert!(est.report().contains("lambda"));
    }
}
