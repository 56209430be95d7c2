//! Linear readout `ŷ = wᵀ x + bias`, fitted by ridge regression on the
//! reservoir states. The bias is not penalized.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::format;
use crate::reservoir::parse_kv;

pub const DEFAULT_WASHOUT: usize = 100;
pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-8;
/// Relative tolerance of the normal-equation residual check.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutModel {
    /// `k` state weights followed by the bias.
    pub weights: Vec<f64>,
    pub ridge_lambda: f64,
    pub washout: usize,
}

impl ReadoutModel {
    pub fn k(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn bias(&self) -> f64 {
        self.weights[self.k()]
    }

    pub fn predict(&self, state: &[f64]) -> Result<f64> {
        if state.len() != self.k() {
            return Err(Error::Dimension {
                expected: self.k(),
                got: state.len(),
            });
        }
        Ok(state
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| x * w)
            .sum::<f64>()
            + self.bias())
    }

    pub fn predict_all(&self, states: &[Vec<f64>]) -> Result<Vec<f64>> {
        states.iter().map(|s| self.predict(s)).collect()
    }

    /// Keys `ridge_lambda`, `washout`, `weights` (comma list, bias last).
    pub fn to_kv(&self) -> String {
        format!(
            "ridge_lambda = {}\nwashout = {}\nweights = {}\n",
            format::float(self.ridge_lambda),
            self.washout,
            format::float_list(&self.weights, ",")
        )
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let map = parse_kv(text)?;
        let get = |key: &str| {
            map.get(key)
                .ok_or_else(|| Error::Parse(format!("missing key '{key}'")))
        };
        let ridge_lambda = get("ridge_lambda")?
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("ridge_lambda: {e}")))?;
        let washout = get("washout")?
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("washout: {e}")))?;
        let weights = get("weights")?
            .split(',')
            .map(|w| {
                w.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("weights: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Parse(
                "weights must be a non-empty finite list".into(),
            ));
        }
        if ridge_lambda.is_nan() || ridge_lambda < 0.0 {
            return Err(Error::Parse("ridge_lambda must be >= 0".into()));
        }
        Ok(Self {
            weights,
            ridge_lambda,
            washout,
        })
    }
}

/// Solves `(XᵀX + λD) w = Xᵀy` over the rows after `washout`, where `X`
/// carries a trailing bias column and `D = diag(1, …, 1, 0)`.
pub fn train(
    states: &[Vec<f64>],
    targets: &[f64],
    ridge_lambda: f64,
    washout: usize,
) -> Result<ReadoutModel> {
    if states.len() != targets.len() {
        return Err(Error::Dimension {
            expected: states.len(),
            got: targets.len(),
        });
    }
    if !(ridge_lambda >= 0.0 && ridge_lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "ridge_lambda {ridge_lambda} must be finite and >= 0"
        )));
    }
    let k = states.first().map_or(0, Vec::len);
    if k == 0 {
        return Err(Error::InvalidParameter(
            "states must be non-empty vectors".into(),
        ));
    }
    let need = washout + k + 1;
    if states.len() < need {
        return Err(Error::InputTooShort {
            need,
            got: states.len(),
        });
    }
    let rows = &states[washout..];
    let ys = &targets[washout..];
    if let Some(bad) = rows.iter().find(|r| r.len() != k) {
        return Err(Error::Dimension {
            expected: k,
            got: bad.len(),
        });
    }
    if rows.iter().flatten().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite training data".into()));
    }

    let x = DMatrix::from_fn(
        rows.len(),
        k + 1,
        |i, j| if j < k { rows[i][j] } else { 1.0 },
    );
    let y = DVector::from_column_slice(ys);
    let mut a = x.tr_mul(&x);
    for j in 0..k {
        a[(j, j)] += ridge_lambda;
    }
    let rhs = x.tr_mul(&y);

    let chol = a.clone().cholesky().ok_or(Error::Singular)?;
    let diag = chol.l_dirty().diagonal();
    let max_a = a.diagonal().amax();
    let min_pivot = diag.iter().map(|d| d * d).fold(f64::INFINITY, f64::min);
    if min_pivot <= f64::EPSILON * (k + 1) as f64 * max_a {
        return Err(Error::Singular);
    }
    let w = chol.solve(&rhs);

    let residual = (&a * &w - &rhs).amax();
    let scale = (max_a * w.amax()).max(rhs.amax()).max(1.0);
    if residual.is_nan() || residual > RESIDUAL_TOLERANCE * scale {
        return Err(Error::Residual {
            residual,
            tolerance: RESIDUAL_TOLERANCE * scale,
        });
    }
    Ok(ReadoutModel {
        weights: w.iter().copied().collect(),
        ridge_lambda,
        washout,
    })
}

/// `sqrt(mean((p - y)²) / var(y))`; 1 for the mean predictor.
pub fn nrmse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() || targets.is_empty() {
        return Err(Error::Dimension {
            expected: targets.len(),
            got: predictions.len(),
        });
    }
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let var = targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(Error::InvalidParameter("targets have zero variance".into()));
    }
    let mse = predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y).powi(2))
        .sum::<f64>()
        / n;
    Ok((mse / var).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_states(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![(i as f64 * 0.37).sin()]).collect()
    }

    #[test]
    fn doubles_scalar() {
        let xs = scalar_states(50);
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x[0]).collect();
        let m = train(&xs, &ys, 0.0, 0).unwrap();
        assert!((m.weights[0] - 2.0).abs() < 1e-12);
        assert!(m.bias().abs() < 1e-12);
        for (x, y) in xs.iter().zip(&ys) {
            assert!((m.predict(x).unwrap() - y).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_target() {
        let xs = scalar_states(50);
        let m = train(&xs, &[5.0; 50], 0.0, 10).unwrap();
        assert!(m.weights[0].abs() < 1e-12);
        assert!((m.bias() - 5.0).abs() < 1e-12);
        assert_eq!(m.washout, 10);
    }

    #[test]
    fn zero_weights_give_bias() {
        let m = ReadoutModel {
            weights: vec![0.0, 0.0, -3.5],
            ridge_lambda: 0.0,
            washout: 0,
        };
        assert_eq!(m.predict(&[7.0, -2.0]).unwrap(), -3.5);
        assert!(m.predict(&[1.0]).is_err());
    }

    fn noisy_problem() -> (Vec<Vec<f64>>, Vec<f64>) {
        let xs: Vec<Vec<f64>> = (0..200)
            .map(|i| {
                let t = i as f64;
                vec![(0.3 * t).sin(), (0.7 * t).cos(), (1.1 * t).sin()]
            })
            .collect();
        let ys = xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                1.5 * x[0] - 2.0 * x[1] + 0.5 * x[2] + 0.3 * ((i * 7919 % 17) as f64 / 17.0 - 0.5)
            })
            .collect();
        (xs, ys)
    }

    #[test]
    fn ridge_shrinks_and_error_grows() {
        let (xs, ys) = noisy_problem();
        let mut prev_norm = f64::INFINITY;
        let mut prev_err = 0.0;
        for lambda in [0.0, 1.0, 10.0, 100.0] {
            let m = train(&xs, &ys, lambda, 0).unwrap();
            let norm = m.weights[..3].iter().map(|w| w * w).sum::<f64>().sqrt();
            let err = nrmse(&m.predict_all(&xs).unwrap(), &ys).unwrap();
            assert!(norm < prev_norm, "lambda {lambda}");
            assert!(err >= prev_err, "lambda {lambda}");
            prev_norm = norm;
            prev_err = err;
        }
    }

    #[test]
    fn singular_without_ridge() {
        let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let ys: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert!(matches!(train(&xs, &ys, 0.0, 0), Err(Error::Singular)));
        assert!(train(&xs, &ys, 1e-3, 0).is_ok());
    }

    #[test]
    fn preconditions() {
        let xs = scalar_states(5);
        assert!(train(&xs, &[1.0; 5], 0.0, 3).is_ok());
        assert!(matches!(
            train(&xs, &[1.0; 5], 0.0, 4),
            Err(Error::InputTooShort { need: 6, got: 5 })
        ));
        assert!(train(&xs, &[1.0; 4], 0.0, 0).is_err());
        assert!(train(&xs, &[1.0; 5], -1.0, 0).is_err());
    }

    #[test]
    fn nrmse_baseline() {
        let ys = [1.0, 2.0, 3.0, 4.0];
        assert!((nrmse(&[2.5; 4], &ys).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(nrmse(&ys, &ys).unwrap(), 0.0);
        assert!(nrmse(&[1.0; 3], &[1.0; 3]).is_err());
    }

    #[test]
    fn kv_round_trip() {
        let (xs, ys) = noisy_problem();
        let m = train(&xs, &ys, 0.5, 20).unwrap();
        assert_eq!(ReadoutModel::from_kv(&m.to_kv()).unwrap(), m);
        assert!(ReadoutModel::from_kv("washout = 1").is_err());
    }
}
