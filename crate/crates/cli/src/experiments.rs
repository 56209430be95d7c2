//! Experiment drivers behind the subcommands. Grid sweeps run on the
//! current rayon pool and return rows in grid order.

use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use ecp_esn::analysis::lyapunov::{DEFAULT_D0, DEFAULT_HORIZON, DEFAULT_WASHOUT, MIN_STEPS};
use ecp_esn::analysis::{
    classify_decay, lyapunov_derivative_product, lyapunov_renormalized, solve_critical_b,
    CriticalPoint, DecayFit, DistanceSeries, LyapunovEstimate,
};
use ecp_esn::readout::{self, ReadoutModel};
use ecp_esn::reservoir::{EcpNeuronConfig, RandomConfig, Reservoir, TanhNeuronConfig};
use ecp_esn::rng::{self, streams};
use ecp_esn::signals::{InputSequence, SignalKind};
use ecp_esn::transfer::{EcpList, Variant};
use rayon::prelude::*;

/// `{0.05, 0.10, …, 1.50}`.
pub fn alpha_grid() -> Vec<f64> {
    (1..=30).map(|i| i as f64 / 20.0).collect()
}

/// `{0.50, 0.55, …, 1.50}`.
pub fn gamma_grid() -> Vec<f64> {
    (10..=30).map(|i| i as f64 / 20.0).collect()
}

/// Initial state for Lyapunov runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StartState {
    /// On the period-2 orbit of the expected alternating input.
    #[default]
    Orbit,
    Zero,
}

impl FromStr for StartState {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orbit" => Ok(StartState::Orbit),
            "zero" => Ok(StartState::Zero),
            _ => bail!("unknown start state '{s}' (orbit, zero)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovOptions {
    pub horizon: usize,
    pub washout: usize,
    pub d0: f64,
    pub start: StartState,
    pub seed: u64,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            washout: DEFAULT_WASHOUT,
            d0: DEFAULT_D0,
            start: StartState::Orbit,
            seed: 1,
        }
    }
}

impl LyapunovOptions {
    fn check(&self) -> Result<()> {
        ensure!(
            self.horizon >= MIN_STEPS,
            "horizon {} below {MIN_STEPS}",
            self.horizon
        );
        Ok(())
    }

    fn length(&self) -> usize {
        self.washout + self.horizon
    }
}

fn ecp_neuron(
    alpha: f64,
    variant: Variant,
    start: StartState,
    first_input: f64,
) -> Result<Reservoir> {
    let cfg = EcpNeuronConfig {
        alpha,
        ecps: EcpList::unit_pair(),
        variant,
    };
    let mut r = Reservoir::ecp_neuron(&cfg)?;
    if start == StartState::Orbit {
        r.set_state(&[EcpNeuronConfig::orbit_state(first_input)])?;
    }
    Ok(r)
}

fn tanh_neuron(
    cp: &CriticalPoint,
    b: f64,
    start: StartState,
    first_input: f64,
) -> Result<Reservoir> {
    let mut r = Reservoir::tanh_neuron(&TanhNeuronConfig {
        b,
        amplitude: cp.amplitude,
    })?;
    if start == StartState::Orbit {
        r.set_state(&[cp.orbit_state(first_input)])?;
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaRow {
    pub alpha: f64,
    pub lambda: f64,
    pub stderr: f64,
}

/// Renormalized Λ of the one-neuron ECP network under its expected
/// alternating ±1 input, one row per `α`.
pub fn sweep_alpha(
    alphas: &[f64],
    variant: Variant,
    opts: &LyapunovOptions,
) -> Result<Vec<AlphaRow>> {
    opts.check()?;
    ensure!(!alphas.is_empty(), "empty alpha grid");
    if let Some(a) = alphas.iter().find(|&&a| !(a > 0.0 && a <= 1.5)) {
        bail!("alpha {a} outside (0, 1.5]");
    }
    let inputs = InputSequence::alternating(1.0, opts.length()).generate()?;
    alphas
        .par_iter()
        .map(|&alpha| {
            let r = ecp_neuron(alpha, variant, opts.start, inputs[0])?;
            let est = lyapunov_renormalized(&r, &inputs, opts.d0, opts.washout, opts.seed)?;
            Ok(AlphaRow {
                alpha,
                lambda: est.lambda,
                stderr: est.stderr,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaRow {
    pub gamma: f64,
    pub lambda_ecp: f64,
    pub lambda_tanh: f64,
}

/// Λ of the ECP network (α = 1, amplitude 1) and of the `tanh` network at
/// its critical gain (amplitude π/4), both driven by `γ` times their
/// expected alternating input.
pub fn sweep_gamma(
    gammas: &[f64],
    variant: Variant,
    opts: &LyapunovOptions,
) -> Result<Vec<GammaRow>> {
    opts.check()?;
    ensure!(!gammas.is_empty(), "empty gamma grid");
    if let Some(g) = gammas.iter().find(|&&g| !(0.25..=2.0).contains(&g)) {
        bail!("gamma {g} outside [0.25, 2]");
    }
    let cp = solve_critical_b(FRAC_PI_4).context("critical gain")?;
    gammas
        .par_iter()
        .map(|&gamma| {
            let u_ecp = InputSequence::alternating(1.0, opts.length())
                .scaled(gamma)
                .generate()?;
            let u_tanh = InputSequence::alternating(FRAC_PI_4, opts.length())
                .scaled(gamma)
                .generate()?;
            let ecp = ecp_neuron(1.0, variant, opts.start, u_ecp[0])?;
            let tanh = tanh_neuron(&cp, cp.b_star, opts.start, u_tanh[0])?;
            Ok(GammaRow {
                gamma,
                lambda_ecp: lyapunov_renormalized(&ecp, &u_ecp, opts.d0, opts.washout, opts.seed)?
                    .lambda,
                lambda_tanh: lyapunov_renormalized(
                    &tanh,
                    &u_tanh,
                    opts.d0,
                    opts.washout,
                    opts.seed,
                )?
                .lambda,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Alternating,
    Iid,
    Constant,
}

impl FromStr for InputKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alternating" => Ok(InputKind::Alternating),
            "iid" => Ok(InputKind::Iid),
            "constant" => Ok(InputKind::Constant),
            _ => bail!("unknown input '{s}' (alternating, iid, constant)"),
        }
    }
}

impl InputKind {
    fn sequence(self, amplitude: f64, seed: u64, length: usize) -> InputSequence {
        match self {
            InputKind::Alternating => InputSequence::alternating(amplitude, length),
            InputKind::Iid => InputSequence::iid(amplitude, seed, length),
            InputKind::Constant => InputSequence::constant(amplitude, length),
        }
    }
}

/// How the two initial states of a forgetting run are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitMode {
    /// Zero state against a copy displaced by `d0`.
    FixedDelta(f64),
    /// A seeded `±tanh 1` draw against its sign flip.
    BitScale,
}

impl InitMode {
    pub fn parse(mode: &str, d0: f64) -> Result<Self> {
        match mode {
            "fixed-delta" => {
                ensure!(d0 > 0.0 && d0.is_finite(), "d0 {d0} must be > 0");
                Ok(InitMode::FixedDelta(d0))
            }
            "bit-scale" => Ok(InitMode::BitScale),
            _ => bail!("unknown init mode '{mode}' (fixed-delta, bit-scale)"),
        }
    }

    pub fn states(self, seed: u64) -> (f64, f64) {
        match self {
            InitMode::FixedDelta(d0) => (0.0, d0),
            InitMode::BitScale => {
                let x =
                    1f64.tanh() * rng::fair_sign(&mut rng::stream(seed, streams::INITIAL_STATE));
                (x, -x)
            }
        }
    }
}

pub const MAX_FORGETTING_HORIZON: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ForgettingOptions {
    pub input: InputKind,
    pub amplitude: f64,
    pub alpha: f64,
    pub variant: Variant,
    pub init: InitMode,
    pub horizon: usize,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForgettingRun {
    pub replicate: usize,
    pub seed: u64,
    pub series: DistanceSeries,
    pub fit: DecayFit,
}

/// Paired one-neuron runs on identical input; replicate `r` uses seed
/// `seed + r` for both the input and the initial draw.
pub fn forgetting(opts: &ForgettingOptions) -> Result<Vec<ForgettingRun>> {
    ensure!(
        (1..=MAX_FORGETTING_HORIZON).contains(&opts.horizon),
        "horizon {} outside [1, {MAX_FORGETTING_HORIZON}]",
        opts.horizon
    );
    ensure!(opts.replicates >= 1, "need at least one replicate");
    let r = ecp_neuron(opts.alpha, opts.variant, StartState::Zero, 0.0)?;
    (0..opts.replicates)
        .into_par_iter()
        .map(|rep| {
            let seed = opts.seed.wrapping_add(rep as u64);
            let inputs = opts
                .input
                .sequence(opts.amplitude, seed, opts.horizon)
                .generate()?;
            let (x0, y0) = opts.init.states(seed);
            let series = r.run_pair(&[x0], &[y0], &inputs)?;
            let fit = classify_decay(&series);
            Ok(ForgettingRun {
                replicate: rep,
                seed,
                series,
                fit,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum System {
    Ecp,
    Tanh,
}

impl FromStr for System {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ecp" => Ok(System::Ecp),
            "tanh" => Ok(System::Tanh),
            _ => bail!("unknown system '{s}' (ecp, tanh)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Renormalized,
    DerivativeProduct,
    Both,
}

impl FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "renormalized" => Ok(Method::Renormalized),
            "derivative-product" => Ok(Method::DerivativeProduct),
            "both" => Ok(Method::Both),
            _ => bail!("unknown method '{s}' (renormalized, derivative-product, both)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovRequest {
    pub system: System,
    /// α for the ECP network.
    pub alpha: f64,
    /// Gain for the `tanh` network; the critical gain when absent.
    pub b: Option<f64>,
    pub variant: Variant,
    pub input: InputKind,
    /// Overrides the generated input.
    pub input_file: Option<PathBuf>,
    /// Base amplitude; 1 for the ECP network and π/4 for `tanh` when absent.
    pub amplitude: Option<f64>,
    pub gamma: f64,
    pub method: Method,
    pub opts: LyapunovOptions,
}

/// One-neuron Lyapunov estimate(s) for an arbitrary input.
pub fn lyapunov(req: &LyapunovRequest) -> Result<Vec<LyapunovEstimate>> {
    req.opts.check()?;
    ensure!(req.gamma > 0.0, "gamma {} must be > 0", req.gamma);
    let amplitude = req.amplitude.unwrap_or(match req.system {
        System::Ecp => 1.0,
        System::Tanh => FRAC_PI_4,
    });
    let base = match &req.input_file {
        Some(path) => InputSequence::new(
            SignalKind::FromFile(path.clone()),
            amplitude,
            req.opts.seed,
            req.opts.length(),
        ),
        None => req
            .input
            .sequence(amplitude, req.opts.seed, req.opts.length()),
    };
    let inputs = base.scaled(req.gamma).generate()?;
    let r = match req.system {
        System::Ecp => ecp_neuron(req.alpha, req.variant, req.opts.start, inputs[0])?,
        System::Tanh => {
            let cp = solve_critical_b(amplitude)?;
            tanh_neuron(&cp, req.b.unwrap_or(cp.b_star), req.opts.start, inputs[0])?
        }
    };
    let mut out = Vec::new();
    if matches!(req.method, Method::Renormalized | Method::Both) {
        out.push(lyapunov_renormalized(
            &r,
            &inputs,
            req.opts.d0,
            req.opts.washout,
            req.opts.seed,
        )?);
    }
    if matches!(req.method, Method::DerivativeProduct | Method::Both) {
        out.push(lyapunov_derivative_product(&r, &inputs, req.opts.washout)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutOptions {
    pub k: usize,
    pub delay: usize,
    pub length: usize,
    pub amplitude: f64,
    pub ridge_lambda: f64,
    pub washout: usize,
    pub variant: Variant,
    pub seed: u64,
}

impl Default for ReadoutOptions {
    fn default() -> Self {
        Self {
            k: 8,
            delay: 3,
            length: 5000,
            amplitude: 0.5,
            ridge_lambda: readout::DEFAULT_RIDGE_LAMBDA,
            washout: readout::DEFAULT_WASHOUT,
            variant: Variant::Bridge,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutDemo {
    pub model: ReadoutModel,
    pub train_nrmse: f64,
    pub test_nrmse: f64,
    /// `(t, target, prediction)` on the post-washout test rows.
    pub test_rows: Vec<(usize, f64, f64)>,
}

/// Delayed recall `u_{t-delay}` of iid ±1 input from an orthogonal ECP
/// reservoir; trains on one seeded run and tests on the next seed.
pub fn readout_demo(opts: &ReadoutOptions) -> Result<ReadoutDemo> {
    ensure!(opts.length > opts.washout + opts.delay, "length too short");
    let cfg = RandomConfig {
        k: opts.k,
        seed: opts.seed,
        ecps: EcpList::unit_pair(),
        variant: opts.variant,
        amplitude: opts.amplitude,
    };
    let dataset = |seed: u64| -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let mut r = Reservoir::random(&cfg)?;
        let inputs = InputSequence::iid(1.0, seed, opts.length).generate()?;
        let states = r
            .run(&inputs, true)?
            .records
            .into_iter()
            .map(|rec| rec.y)
            .collect();
        let targets = (0..opts.length)
            .map(|t| t.checked_sub(opts.delay).map_or(0.0, |s| inputs[s]))
            .collect();
        Ok((states, targets))
    };
    let (train_x, train_y) = dataset(opts.seed)?;
    let (test_x, test_y) = dataset(opts.seed.wrapping_add(1))?;
    let model = readout::train(&train_x, &train_y, opts.ridge_lambda, opts.washout)?;
    let w = opts.washout;
    let fitted = model.predict_all(&train_x[w..])?;
    let predicted = model.predict_all(&test_x[w..])?;
    Ok(ReadoutDemo {
        train_nrmse: readout::nrmse(&fitted, &train_y[w..])?,
        test_nrmse: readout::nrmse(&predicted, &test_y[w..])?,
        test_rows: predicted
            .iter()
            .zip(&test_y[w..])
            .enumerate()
            .map(|(i, (&p, &y))| (i + w, y, p))
            .collect(),
        model,
    })
}
