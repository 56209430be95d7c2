//! Reservoir dynamics.
//!
//! ```text
//! y_lin,t = W y_{t-1} + w_in u_t
//! y_t     = θ(y_lin,t)            (elementwise, one θ per neuron)
//! ```
//!
//! Scalar input series are replicated across all `n` input channels.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::analysis::DistanceSeries;
use crate::error::{Error, Result};
use crate::format;
use crate::rng::{self, streams};
use crate::transfer::{EcpList, MorphableTransfer, Variant};

/// Tolerance for the orthogonality flag.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-12;

/// Per-neuron transfer function.
#[derive(Debug, Clone, PartialEq)]
pub enum Activation {
    /// Plain `tanh`; the baseline of the gain-`b` network.
    Tanh,
    Morphable(Arc<MorphableTransfer>),
}

impl Activation {
    pub fn morphable(ecps: EcpList, variant: Variant) -> Result<Self> {
        Ok(Activation::Morphable(Arc::new(MorphableTransfer::build(
            ecps, variant,
        )?)))
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Morphable(f) => f.eval(x),
        }
    }

    #[inline]
    pub fn slope(&self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let c = x.cosh();
                1.0 / (c * c)
            }
            Activation::Morphable(f) => f.slope(x),
        }
    }
}

/// Supplies per-neuron ECP lists before each step, before the input is seen.
pub trait EcpPredictor: Send + Sync + fmt::Debug {
    /// New ECP list for `neuron` ahead of step `t`, or `None` to keep the
    /// current transfer function.
    fn predict(&self, neuron: usize, t: u64, state: &[f64]) -> Option<EcpList>;
}

/// Never changes the ECPs.
#[derive(Debug, Clone, Copy, Default)]
pub struct StaticPredictor;

impl EcpPredictor for StaticPredictor {
    fn predict(&self, _neuron: usize, _t: u64, _state: &[f64]) -> Option<EcpList> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: u64,
    pub y_lin: Vec<f64>,
    pub y: Vec<f64>,
    /// θ'_i(y_lin[i]).
    pub slopes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Empty when recording was off.
    pub records: Vec<StepRecord>,
    pub final_state: Vec<f64>,
}

impl Trajectory {
    /// CSV with header `t,y_lin_0,..,y_0,..`.
    pub fn to_csv(&self) -> String {
        let k = self.final_state.len();
        let mut out = String::from("t");
        for i in 0..k {
            out.push_str(&format!(",y_lin_{i}"));
        }
        for i in 0..k {
            out.push_str(&format!(",y_{i}"));
        }
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.t.to_string());
            for v in r.y_lin.iter().chain(&r.y) {
                out.push(',');
                out.push_str(&format::float(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// One-neuron network expecting alternating ±1 input:
/// `x_t = θ(-α x_{t-1} + (1 - α tanh 1) u_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EcpNeuronConfig {
    pub alpha: f64,
    pub ecps: EcpList,
    pub variant: Variant,
}

impl EcpNeuronConfig {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            ecps: EcpList::unit_pair(),
            variant: Variant::Bridge,
        }
    }

    pub fn input_weight(&self) -> f64 {
        1.0 - self.alpha * 1f64.tanh()
    }

    /// State that puts the next linear response exactly on the ECP
    /// `sgn(first_input)` under the expected alternating input.
    pub fn orbit_state(first_input: f64) -> f64 {
        if first_input == 0.0 {
            0.0
        } else {
            -1f64.tanh() * first_input.signum()
        }
    }
}

/// One-neuron `tanh` baseline: `x_t = tanh(-b x_{t-1} + u_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TanhNeuronConfig {
    pub b: f64,
    /// Amplitude of the alternating input the gain was tuned for.
    pub amplitude: f64,
}

impl TanhNeuronConfig {
    pub fn new(b: f64) -> Self {
        Self {
            b,
            amplitude: std::f64::consts::FRAC_PI_4,
        }
    }
}

/// Orthogonal `k × k` reservoir with identical morphable transfers.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomConfig {
    pub k: usize,
    pub seed: u64,
    pub ecps: EcpList,
    pub variant: Variant,
    /// Input weights are uniform in `[-amplitude, amplitude]`.
    pub amplitude: f64,
}

/// Serializable reservoir description.
#[derive(Debug, Clone, PartialEq)]
pub enum ReservoirConfig {
    EcpNeuron(EcpNeuronConfig),
    TanhNeuron(TanhNeuronConfig),
    Random(RandomConfig),
}

impl ReservoirConfig {
    pub fn build(&self) -> Result<Reservoir> {
        match self {
            ReservoirConfig::EcpNeuron(c) => Reservoir::ecp_neuron(c),
            ReservoirConfig::TanhNeuron(c) => Reservoir::tanh_neuron(c),
            ReservoirConfig::Random(c) => Reservoir::random(c),
        }
    }

    /// Flat `key = value` block. Keys: kind, alpha, b, amplitude, ecps,
    /// variant, seed, k.
    pub fn to_kv(&self) -> String {
        let mut kv: Vec<(&str, String)> = Vec::new();
        match self {
            ReservoirConfig::EcpNeuron(c) => {
                kv.push(("kind", "ecp-neuron".into()));
                kv.push(("alpha", format::float(c.alpha)));
                kv.push(("ecps", format::float_list(c.ecps.points(), ",")));
                kv.push(("variant", c.variant.to_string()));
            }
            ReservoirConfig::TanhNeuron(c) => {
                kv.push(("kind", "tanh-neuron".into()));
                kv.push(("b", format::float(c.b)));
                kv.push(("amplitude", format::float(c.amplitude)));
            }
            ReservoirConfig::Random(c) => {
                kv.push(("kind", "random".into()));
                kv.push(("k", c.k.to_string()));
                kv.push(("seed", c.seed.to_string()));
                kv.push(("amplitude", format::float(c.amplitude)));
                kv.push(("ecps", format::float_list(c.ecps.points(), ",")));
                kv.push(("variant", c.variant.to_string()));
            }
        }
        kv.into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let map = parse_kv(text)?;
        let get = |key: &str| {
            map.get(key)
                .map(String::as_str)
                .ok_or_else(|| Error::Parse(format!("missing key '{key}'")))
        };
        let num = |key: &str| -> Result<f64> {
            get(key)?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{key}: {e}")))
        };
        let int = |key: &str| -> Result<u64> {
            get(key)?
                .parse::<u64>()
                .map_err(|e| Error::Parse(format!("{key}: {e}")))
        };
        let ecps = || -> Result<EcpList> {
            map.get("ecps")
                .map(|s| s.parse())
                .unwrap_or_else(|| Ok(EcpList::unit_pair()))
        };
        let variant = || -> Result<Variant> {
            map.get("variant")
                .map(|s| s.parse())
                .unwrap_or(Ok(Variant::Bridge))
        };
        match get("kind")? {
            "ecp-neuron" => Ok(ReservoirConfig::EcpNeuron(EcpNeuronConfig {
                alpha: num("alpha")?,
                ecps: ecps()?,
                variant: variant()?,
            })),
            "tanh-neuron" => Ok(ReservoirConfig::TanhNeuron(TanhNeuronConfig {
                b: num("b")?,
                amplitude: if map.contains_key("amplitude") {
                    num("amplitude")?
                } else {
                    std::f64::consts::FRAC_PI_4
                },
            })),
            "random" => Ok(ReservoirConfig::Random(RandomConfig {
                k: int("k")? as usize,
                seed: int("seed")?,
                ecps: ecps()?,
                variant: variant()?,
                amplitude: num("amplitude")?,
            })),
            other => Err(Error::Parse(format!("unknown reservoir kind '{other}'"))),
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", n + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Product of `k` Householder reflections `I - 2 v vᵀ` with seeded random
/// unit vectors `v`.
pub fn random_orthogonal(k: usize, seed: u64) -> Result<DMatrix<f64>> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "orthogonal matrix needs k >= 1".into(),
        ));
    }
    let mut rng = rng::stream(seed, streams::WEIGHTS);
    let mut q = DMatrix::<f64>::identity(k, k);
    for _ in 0..k {
        let v = random_unit(&mut rng, k);
        // q ← q (I - 2 v vᵀ)
        let qv = &q * &v;
        q.ger(-2.0, &qv, &v, 1.0);
    }
    Ok(q)
}

fn random_unit(rng: &mut impl rand::Rng, k: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(k, |_, _| rng::standard_normal(rng));
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// `‖M Mᵀ - I‖_max`.
pub fn orthogonality_error(m: &DMatrix<f64>) -> f64 {
    let k = m.nrows();
    let g = m * m.transpose() - DMatrix::<f64>::identity(k, k);
    g.amax()
}

#[derive(Debug, Clone)]
pub struct Reservoir {
    weights: DMatrix<f64>,
    input_weights: DMatrix<f64>,
    activations: Vec<Activation>,
    state: DVector<f64>,
    orthogonal: bool,
    predictor: Option<Arc<dyn EcpPredictor>>,
    /// Last linear response.
    lin: DVector<f64>,
    /// Row sums of `input_weights`, used for replicated scalar input.
    input_gain: DVector<f64>,
}

impl Reservoir {
    /// Starts from the zero state.
    pub fn new(
        weights: DMatrix<f64>,
        input_weights: DMatrix<f64>,
        activations: Vec<Activation>,
    ) -> Result<Self> {
        let k = weights.nrows();
        if k == 0 {
            return Err(Error::InvalidParameter("reservoir needs k >= 1".into()));
        }
        if weights.ncols() != k {
            return Err(Error::Dimension {
                expected: k,
                got: weights.ncols(),
            });
        }
        if input_weights.nrows() != k {
            return Err(Error::Dimension {
                expected: k,
                got: input_weights.nrows(),
            });
        }
        if input_weights.ncols() == 0 {
            return Err(Error::InvalidParameter("reservoir needs n >= 1".into()));
        }
        if activations.len() != k {
            return Err(Error::Dimension {
                expected: k,
                got: activations.len(),
            });
        }
        if weights
            .iter()
            .chain(input_weights.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidParameter("non-finite weight".into()));
        }
        let input_gain = DVector::from_fn(k, |i, _| input_weights.row(i).sum());
        Ok(Self {
            weights,
            input_weights,
            activations,
            state: DVector::zeros(k),
            orthogonal: false,
            predictor: None,
            lin: DVector::zeros(k),
            input_gain,
        })
    }

    pub fn ecp_neuron(cfg: &EcpNeuronConfig) -> Result<Self> {
        if !(cfg.alpha > 0.0 && cfg.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha {} must be > 0",
                cfg.alpha
            )));
        }
        let act = Activation::morphable(cfg.ecps.clone(), cfg.variant)?;
        Self::new(
            DMatrix::from_element(1, 1, -cfg.alpha),
            DMatrix::from_element(1, 1, cfg.input_weight()),
            vec![act],
        )
    }

    pub fn tanh_neuron(cfg: &TanhNeuronConfig) -> Result<Self> {
        if !(cfg.b > 0.0 && cfg.b.is_finite()) {
            return Err(Error::InvalidParameter(format!("b {} must be > 0", cfg.b)));
        }
        Self::new(
            DMatrix::from_element(1, 1, -cfg.b),
            DMatrix::from_element(1, 1, 1.0),
            vec![Activation::Tanh],
        )
    }

    pub fn random(cfg: &RandomConfig) -> Result<Self> {
        let w = random_orthogonal(cfg.k, cfg.seed)?;
        let mut rng = rng::stream(cfg.seed, streams::INPUT_WEIGHTS);
        let w_in = DMatrix::from_fn(cfg.k, 1, |_, _| {
            cfg.amplitude * rng::symmetric_unit(&mut rng)
        });
        let act = Activation::morphable(cfg.ecps.clone(), cfg.variant)?;
        Self::new(w, w_in, vec![act; cfg.k])?.checked_orthogonal()
    }

    /// Sets the orthogonality flag after verifying `‖W Wᵀ - I‖_max ≤ 1e-12`.
    pub fn checked_orthogonal(mut self) -> Result<Self> {
        let err = orthogonality_error(&self.weights);
        if err > ORTHOGONALITY_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "W is not orthogonal (error {err:e})"
            )));
        }
        self.orthogonal = true;
        Ok(self)
    }

    pub fn with_predictor(mut self, predictor: Arc<dyn EcpPredictor>) -> Self {
        self.predictor = Some(predictor);
        self
    }

    pub fn k(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n(&self) -> usize {
        self.input_weights.ncols()
    }

    pub fn is_orthogonal(&self) -> bool {
        self.orthogonal
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn input_weights(&self) -> &DMatrix<f64> {
        &self.input_weights
    }

    pub fn activation(&self, neuron: usize) -> &Activation {
        &self.activations[neuron]
    }

    pub fn state(&self) -> &[f64] {
        self.state.as_slice()
    }

    pub fn set_state(&mut self, state: &[f64]) -> Result<()> {
        if state.len() != self.k() {
            return Err(Error::Dimension {
                expected: self.k(),
                got: state.len(),
            });
        }
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite state".into()));
        }
        self.state.copy_from_slice(state);
        Ok(())
    }

    /// Linear response of the most recent step.
    pub fn linear_response(&self) -> &[f64] {
        self.lin.as_slice()
    }

    fn refresh_transfers(&mut self, t: u64) -> Result<()> {
        let Some(predictor) = self.predictor.clone() else {
            return Ok(());
        };
        for i in 0..self.k() {
            if let Some(ecps) = predictor.predict(i, t, self.state.as_slice()) {
                let variant = match &self.activations[i] {
                    Activation::Morphable(f) => f.variant(),
                    Activation::Tanh => Variant::Bridge,
                };
                self.activations[i] = Activation::morphable(ecps, variant)?;
            }
        }
        Ok(())
    }

    fn apply_transfers(&mut self) {
        for ((y, &x), act) in self
            .state
            .iter_mut()
            .zip(self.lin.iter())
            .zip(&self.activations)
        {
            *y = act.eval(x);
        }
    }

    /// Advances one step with an `n`-vector input.
    pub fn advance(&mut self, u: &[f64], t: u64) -> Result<()> {
        if u.len() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                got: u.len(),
            });
        }
        self.refresh_transfers(t)?;
        self.lin.gemv(1.0, &self.weights, &self.state, 0.0);
        let u = DVector::from_column_slice(u);
        self.lin.gemv(1.0, &self.input_weights, &u, 1.0);
        self.apply_transfers();
        Ok(())
    }

    /// Advances one step with the scalar `u` on every input channel.
    pub fn advance_scalar(&mut self, u: f64, t: u64) -> Result<()> {
        self.refresh_transfers(t)?;
        self.lin.gemv(1.0, &self.weights, &self.state, 0.0);
        self.lin.axpy(u, &self.input_gain, 1.0);
        self.apply_transfers();
        Ok(())
    }

    pub fn step(&mut self, u: &[f64], t: u64) -> Result<StepRecord> {
        self.advance(u, t)?;
        Ok(self.record(t))
    }

    fn record(&self, t: u64) -> StepRecord {
        StepRecord {
            t,
            y_lin: self.lin.as_slice().to_vec(),
            y: self.state.as_slice().to_vec(),
            slopes: self
                .lin
                .iter()
                .zip(&self.activations)
                .map(|(&x, a)| a.slope(x))
                .collect(),
        }
    }

    /// Feeds a scalar series; with `record` off only the final state is kept.
    pub fn run(&mut self, inputs: &[f64], record: bool) -> Result<Trajectory> {
        if inputs.is_empty() {
            return Err(Error::InputTooShort { need: 1, got: 0 });
        }
        let mut records = Vec::with_capacity(if record { inputs.len() } else { 0 });
        for (t, &u) in inputs.iter().enumerate() {
            self.advance_scalar(u, t as u64)?;
            if record {
                records.push(self.record(t as u64));
            }
        }
        Ok(Trajectory {
            records,
            final_state: self.state.as_slice().to_vec(),
        })
    }

    /// Runs two copies from `x0` and `y0` on the same input and records
    /// `‖y_t - x_t‖₂`; stops once the distance is exactly zero.
    pub fn run_pair(&self, x0: &[f64], y0: &[f64], inputs: &[f64]) -> Result<DistanceSeries> {
        let mut a = self.clone();
        let mut b = self.clone();
        a.set_state(x0)?;
        b.set_state(y0)?;
        let mut series = DistanceSeries::default();
        let d0 = distance(&a.state, &b.state);
        series.push(0, d0);
        if d0 == 0.0 {
            series.truncated_at = Some(0);
            return Ok(series);
        }
        for (i, &u) in inputs.iter().enumerate() {
            a.advance_scalar(u, i as u64)?;
            b.advance_scalar(u, i as u64)?;
            let d = distance(&a.state, &b.state);
            let t = i as u64 + 1;
            series.push(t, d);
            if d == 0.0 {
                series.truncated_at = Some(t);
                break;
            }
        }
        Ok(series)
    }
}

pub(crate) fn distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t1() -> f64 {
        1f64.tanh()
    }

    #[test]
    fn orthogonal_one_by_one() {
        for seed in 0..5 {
            let q = random_orthogonal(1, seed).unwrap();
            assert!(q[(0, 0)] == 1.0 || q[(0, 0)] == -1.0);
        }
        assert!(random_orthogonal(0, 1).is_err());
    }

    #[test]
    fn orthogonal_eight() {
        let q = random_orthogonal(8, 42).unwrap();
        assert!(orthogonality_error(&q) <= 1e-12);
        assert_eq!(q, random_orthogonal(8, 42).unwrap());
        assert_ne!(q, random_orthogonal(8, 43).unwrap());
    }

    #[test]
    fn ecp_neuron_linear_response_is_one_on_orbit() {
        for alpha in [0.3, 0.5, 0.8, 1.0, 1.2, 1.5] {
            let mut r = Reservoir::ecp_neuron(&EcpNeuronConfig::new(alpha)).unwrap();
            r.set_state(&[-t1()]).unwrap();
            let rec = r.step(&[1.0], 0).unwrap();
            assert!((rec.y_lin[0] - 1.0).abs() <= 1e-15, "alpha {alpha}");
            assert!((rec.y[0] - t1()).abs() <= 1e-15);
            assert_eq!(rec.y[0], r.activation(0).eval(rec.y_lin[0]));
        }
    }

    #[test]
    fn ecp_neuron_origin_is_fixed_under_zero_input() {
        let mut r = Reservoir::ecp_neuron(&EcpNeuronConfig::new(0.7)).unwrap();
        let traj = r.run(&[0.0; 50], true).unwrap();
        assert!(traj.records.iter().all(|s| s.y[0] == 0.0));
    }

    #[test]
    fn ecp_neuron_alpha_one_locks_to_orbit() {
        let mut r = Reservoir::ecp_neuron(&EcpNeuronConfig::new(1.0)).unwrap();
        let inputs: Vec<f64> = (0..200)
            .map(|t| if t % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        r.set_state(&[EcpNeuronConfig::orbit_state(inputs[0])])
            .unwrap();
        let traj = r.run(&inputs, true).unwrap();
        for (t, s) in traj.records.iter().enumerate() {
            let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(s.y_lin[0], sign);
            assert_eq!(s.y[0], sign * t1());
        }
    }

    #[test]
    fn ecp_neuron_orbit_invariance_all_alpha() {
        let inputs: Vec<f64> = (0..1000)
            .map(|t| if t % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        for i in 1..=30 {
            let alpha = 0.05 * i as f64;
            let mut r = Reservoir::ecp_neuron(&EcpNeuronConfig::new(alpha)).unwrap();
            r.set_state(&[EcpNeuronConfig::orbit_state(1.0)]).unwrap();
            let traj = r.run(&inputs[..40], true).unwrap();
            for s in &traj.records {
                assert!(
                    (s.y_lin[0].abs() - 1.0).abs() <= 1e-15,
                    "alpha {alpha}: {}",
                    s.y_lin[0]
                );
            }
        }
    }

    #[test]
    fn record_modes_agree() {
        let inputs: Vec<f64> = (0..300)
            .map(|t| ((t * 7919) % 13) as f64 / 6.0 - 1.0)
            .collect();
        let cfg = RandomConfig {
            k: 5,
            seed: 9,
            ecps: EcpList::unit_pair(),
            variant: Variant::Bridge,
            amplitude: 0.5,
        };
        let mut a = Reservoir::random(&cfg).unwrap();
        let mut b = a.clone();
        let full = a.run(&inputs, true).unwrap();
        let light = b.run(&inputs, false).unwrap();
        assert!(light.records.is_empty());
        assert_eq!(full.final_state, light.final_state);
        assert_eq!(full.records.last().unwrap().y, full.final_state);
        assert!(a.run(&[], false).is_err());
    }

    #[test]
    fn dimension_errors() {
        let mut r = Reservoir::ecp_neuron(&EcpNeuronConfig::new(1.0)).unwrap();
        assert!(matches!(
            r.step(&[1.0, 2.0], 0),
            Err(Error::Dimension { .. })
        ));
        assert!(r.set_state(&[0.0, 0.0]).is_err());
        assert!(r.run_pair(&[0.0], &[0.0, 1.0], &[1.0]).is_err());
        assert!(Reservoir::new(
            DMatrix::zeros(2, 3),
            DMatrix::zeros(2, 1),
            vec![Activation::Tanh; 2]
        )
        .is_err());
        assert!(Reservoir::ecp_neuron(&EcpNeuronConfig::new(0.0)).is_err());
        assert!(Reservoir::tanh_neuron(&TanhNeuronConfig::new(-1.0)).is_err());
    }

    #[test]
    fn pair_identical_states_terminate() {
        let r = Reservoir::ecp_neuron(&EcpNeuronConfig::new(1.0)).unwrap();
        let s = r.run_pair(&[0.3], &[0.3], &[1.0; 10]).unwrap();
        assert_eq!(s.points(), &[(0, 0.0)]);
        assert_eq!(s.truncated_at, Some(0));
    }

    #[test]
    fn pair_contracts_at_rate_alpha() {
        let r = Reservoir::ecp_neuron(&EcpNeuronConfig::new(0.5)).unwrap();
        let inputs: Vec<f64> = (0..200)
            .map(|t| ((t * 31) % 7) as f64 / 3.0 - 1.0)
            .collect();
        let s = r.run_pair(&[0.1], &[0.4], &inputs).unwrap();
        let d0 = s.points()[0].1;
        for &(t, d) in s.points() {
            assert!(d <= d0 * 0.5f64.powi(t as i32) + 1e-12, "t {t}");
        }
    }

    #[test]
    fn config_round_trip() {
        let cfgs = [
            ReservoirConfig::EcpNeuron(EcpNeuronConfig::new(0.75)),
            ReservoirConfig::TanhNeuron(TanhNeuronConfig::new(2.344)),
            ReservoirConfig::Random(RandomConfig {
                k: 8,
                seed: 3,
                ecps: EcpList::new([-0.5, 1.5]).unwrap(),
                variant: Variant::Plateau,
                amplitude: 0.25,
            }),
        ];
        for c in cfgs {
            let text = c.to_kv();
            assert_eq!(ReservoirConfig::from_kv(&text).unwrap(), c);
        }
        assert!(ReservoirConfig::from_kv("kind = nope").is_err());
        assert!(ReservoirConfig::from_kv("alpha").is_err());
    }

    #[derive(Debug)]
    struct ShiftToState;

    impl EcpPredictor for ShiftToState {
        fn predict(&self, _neuron: usize, t: u64, _state: &[f64]) -> Option<EcpList> {
            (t == 3).then(|| EcpList::new([0.5]).unwrap())
        }
    }

    #[test]
    fn predictor_rebuilds_before_step() {
        let mut r = Reservoir::ecp_neuron(&EcpNeuronConfig::new(1.0))
            .unwrap()
            .with_predictor(Arc::new(ShiftToState));
        let mut plain = Reservoir::ecp_neuron(&EcpNeuronConfig::new(1.0))
            .unwrap()
            .with_predictor(Arc::new(StaticPredictor));
        for t in 0..3 {
            r.advance_scalar(0.2, t).unwrap();
            plain.advance_scalar(0.2, t).unwrap();
        }
        assert_eq!(r.state(), plain.state());
        r.advance_scalar(0.2, 3).unwrap();
        match r.activation(0) {
            Activation::Morphable(f) => assert_eq!(f.ecps().points(), &[0.0, 0.5]),
            Activation::Tanh => panic!("expected morphable"),
        }
        let lin = r.linear_response()[0];
        assert_eq!(r.state()[0], r.activation(0).eval(lin));
    }

    #[test]
    fn trajectory_csv_header() {
        let mut r = Reservoir::random(&RandomConfig {
            k: 2,
            seed: 1,
            ecps: EcpList::unit_pair(),
            variant: Variant::Bridge,
            amplitude: 1.0,
        })
        .unwrap();
        let csv = r.run(&[1.0, -1.0], true).unwrap().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,y_lin_0,y_lin_1,y_0,y_1");
        assert_eq!(csv.lines().count(), 3);
    }
}
