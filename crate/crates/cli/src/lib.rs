//! Command-line experiments for critical echo state networks.
//!
//! Every subcommand writes LF-terminated CSV files with a header row into
//! the output directory. Floats use 17 significant digits, so every value
//! parses back to the same bits.

pub mod config;
pub mod experiments;

use std::f64::consts::FRAC_PI_4;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ecp_esn::analysis::{solve_critical_b, DecayFit, LyapunovEstimate};
use ecp_esn::format::float;
use ecp_esn::transfer::{EcpList, MorphableTransfer, Variant};

use config::{Grid, Settings};
use experiments::{
    ForgettingOptions, InitMode, InputKind, LyapunovOptions, LyapunovRequest, Method,
    ReadoutOptions, StartState, System,
};

#[derive(Debug, Parser)]
#[command(
    name = "ecp-esn",
    version,
    about = "Critical echo state network experiments"
)]
pub struct Cli {
    /// Experiment seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps; defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// `key = value` file; keys are long flag names without dashes.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a morphable transfer function.
    TransferDump(TransferDumpArgs),
    /// Lyapunov exponent of the ECP network across α.
    SweepAlpha(SweepArgs),
    /// Lyapunov exponents of the ECP and tanh networks across input scale γ.
    SweepGamma(SweepArgs),
    /// Forgetting curves of two initial states under identical input.
    Forgetting(ForgettingArgs),
    /// Critical gain of the tanh network for an alternating input amplitude.
    CriticalB(CriticalArgs),
    /// Lyapunov exponent of a one-neuron network.
    Lyapunov(LyapunovArgs),
    /// Delayed-recall readout on an orthogonal ECP reservoir.
    ReadoutDemo(ReadoutArgs),
}

#[derive(Debug, Args)]
pub struct TransferDumpArgs {
    /// Comma-separated ECPs; 0 is always added [default: -1,0,1].
    #[arg(long, allow_hyphen_values = true)]
    pub ecps: Option<String>,
    /// plateau or bridge [default: bridge].
    #[arg(long)]
    pub variant: Option<String>,
    /// [default: -4]
    #[arg(long, allow_hyphen_values = true)]
    pub lo: Option<f64>,
    /// [default: 4]
    #[arg(long, allow_hyphen_values = true)]
    pub hi: Option<f64>,
    /// Number of samples [default: 801].
    #[arg(long)]
    pub n: Option<usize>,
    /// Also write a gnuplot script.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated grid; defaults to the standard grid of the sweep.
    #[arg(long)]
    pub grid: Option<Grid>,
    /// Post-washout steps [default: 100000].
    #[arg(long)]
    pub horizon: Option<usize>,
    /// [default: 1000]
    #[arg(long)]
    pub washout: Option<usize>,
    /// Renormalization distance [default: 1e-9].
    #[arg(long, allow_negative_numbers = true)]
    pub d0: Option<f64>,
    /// orbit or zero [default: orbit].
    #[arg(long)]
    pub start: Option<String>,
    /// plateau or bridge [default: bridge].
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct ForgettingArgs {
    /// alternating, iid or constant [default: alternating].
    #[arg(long)]
    pub input: Option<String>,
    /// [default: 1]
    #[arg(long, allow_negative_numbers = true)]
    pub amplitude: Option<f64>,
    /// [default: 1]
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// fixed-delta or bit-scale [default: fixed-delta].
    #[arg(long)]
    pub init: Option<String>,
    /// Initial distance for fixed-delta [default: 1e-3].
    #[arg(long, allow_negative_numbers = true)]
    pub d0: Option<f64>,
    /// Steps, at most 1e6 [default: 100000].
    #[arg(long)]
    pub horizon: Option<usize>,
    /// [default: 8 for iid input, else 1]
    #[arg(long)]
    pub replicates: Option<usize>,
    /// plateau or bridge [default: bridge].
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct CriticalArgs {
    /// Alternating input amplitude [default: π/4].
    #[arg(long, allow_negative_numbers = true)]
    pub amplitude: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LyapunovArgs {
    /// ecp or tanh [default: ecp].
    #[arg(long)]
    pub system: Option<String>,
    /// [default: 1]
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Gain of the tanh network [default: critical gain].
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// alternating, iid or constant [default: alternating].
    #[arg(long)]
    pub input: Option<String>,
    /// One value per line; replaces the generated input.
    #[arg(long)]
    pub input_file: Option<PathBuf>,
    /// [default: 1 for ecp, π/4 for tanh]
    #[arg(long, allow_negative_numbers = true)]
    pub amplitude: Option<f64>,
    /// Input scale [default: 1].
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// renormalized, derivative-product or both [default: both].
    #[arg(long)]
    pub method: Option<String>,
    /// [default: 100000]
    #[arg(long)]
    pub horizon: Option<usize>,
    /// [default: 1000]
    #[arg(long)]
    pub washout: Option<usize>,
    /// [default: 1e-9]
    #[arg(long, allow_negative_numbers = true)]
    pub d0: Option<f64>,
    /// orbit or zero [default: orbit].
    #[arg(long)]
    pub start: Option<String>,
    /// plateau or bridge [default: bridge].
    #[arg(long)]
    pub variant: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReadoutArgs {
    /// Reservoir size [default: 8].
    #[arg(long)]
    pub k: Option<usize>,
    /// Recall delay [default: 3].
    #[arg(long)]
    pub delay: Option<usize>,
    /// Steps per run [default: 5000].
    #[arg(long)]
    pub length: Option<usize>,
    /// Input weight scale [default: 0.5].
    #[arg(long, allow_negative_numbers = true)]
    pub amplitude: Option<f64>,
    /// [default: 1e-8]
    #[arg(long, allow_negative_numbers = true)]
    pub ridge: Option<f64>,
    /// [default: 100]
    #[arg(long)]
    pub washout: Option<usize>,
    /// plateau or bridge [default: bridge].
    #[arg(long)]
    pub variant: Option<String>,
}

/// A finished command: files to write and a summary for stdout.
#[derive(Debug, Default)]
pub struct Output {
    pub files: Vec<(String, String)>,
    pub summary: String,
}

impl Output {
    fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    /// Writes every file into `dir` and returns their paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        self.files
            .iter()
            .map(|(name, contents)| {
                let path = dir.join(name);
                fs::write(&path, contents)
                    .with_context(|| format!("writing {}", path.display()))?;
                Ok(path)
            })
            .collect()
    }
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

fn variant(settings: &Settings, flag: Option<String>) -> Result<Variant> {
    Ok(settings
        .get(flag, "variant", "bridge".to_string())?
        .parse()?)
}

fn lyapunov_options(
    settings: &Settings,
    seed: u64,
    horizon: Option<usize>,
    washout: Option<usize>,
    d0: Option<f64>,
    start: Option<String>,
) -> Result<LyapunovOptions> {
    let defaults = LyapunovOptions::default();
    Ok(LyapunovOptions {
        horizon: settings.get(horizon, "horizon", defaults.horizon)?,
        washout: settings.get(washout, "washout", defaults.washout)?,
        d0: settings.get(d0, "d0", defaults.d0)?,
        start: settings
            .get(start, "start", "orbit".to_string())?
            .parse::<StartState>()?,
        seed,
    })
}

fn gnuplot(
    csv_name: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[(usize, usize, &str)],
    logscale: &str,
) -> String {
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\n");
    s.push_str(&format!("set xlabel '{xlabel}'\nset ylabel '{ylabel}'\n"));
    if !logscale.is_empty() {
        s.push_str(&format!("set logscale {logscale}\n"));
    }
    let plots: Vec<String> = series
        .iter()
        .map(|(x, y, style)| format!("'{csv_name}' using {x}:{y} with {style}"))
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}

/// Runs a parsed command line and returns what it would write.
pub fn execute(cli: Cli) -> Result<Output> {
    let settings = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let seed = settings.get(cli.seed, "seed", 1u64)?;
    let threads = settings.lookup(cli.threads, "threads")?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        anyhow::ensure!(n >= 1, "threads must be >= 1");
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("building worker pool")?;
    pool.install(|| run_command(cli.command, &settings, seed))
}

fn run_command(command: Command, settings: &Settings, seed: u64) -> Result<Output> {
    let mut out = Output::default();
    match command {
        Command::TransferDump(a) => {
            let ecps: EcpList = settings
                .get(a.ecps, "ecps", "-1,0,1".to_string())?
                .parse()?;
            let variant = variant(settings, a.variant)?;
            let lo = settings.get(a.lo, "lo", -4.0)?;
            let hi = settings.get(a.hi, "hi", 4.0)?;
            let n = settings.get(a.n, "n", 801usize)?;
            let f = MorphableTransfer::build(ecps.clone(), variant)?;
            let rows = f.sample(lo, hi, n)?;
            out.file(
                "transfer.csv",
                csv(
                    "x,theta,slope",
                    rows.iter()
                        .map(|r| format!("{},{},{}", float(r.x), float(r.theta), float(r.slope))),
                ),
            );
            out.file(
                "transfer_ecps.csv",
                csv(
                    "x,theta",
                    ecps.points()
                        .iter()
                        .map(|&p| format!("{},{}", float(p), float(f.eval(p)))),
                ),
            );
            if a.plot {
                let mut script = gnuplot("transfer.csv", "x", "theta", &[(1, 2, "lines")], "");
                script.push_str("replot 'transfer_ecps.csv' using 1:2 with points pt 7\n");
                out.file("transfer.gp", script);
            }
            out.summary =
                format!("{variant} transfer with ECPs {ecps}: {n} samples on [{lo}, {hi}]\n");
        }
        Command::SweepAlpha(a) => {
            let grid = settings
                .lookup(a.grid, "grid")?
                .map_or_else(experiments::alpha_grid, |g| g.0);
            let variant = variant(settings, a.variant)?;
            let opts = lyapunov_options(settings, seed, a.horizon, a.washout, a.d0, a.start)?;
            let rows = experiments::sweep_alpha(&grid, variant, &opts)?;
            out.file(
                "sweep_alpha.csv",
                csv(
                    "alpha,lambda,stderr",
                    rows.iter().map(|r| {
                        format!("{},{},{}", float(r.alpha), float(r.lambda), float(r.stderr))
                    }),
                ),
            );
            if a.plot {
                out.file(
                    "sweep_alpha.gp",
                    gnuplot(
                        "sweep_alpha.csv",
                        "alpha",
                        "lambda",
                        &[(1, 2, "linespoints")],
                        "",
                    ),
                );
            }
            for r in &rows {
                out.summary
                    .push_str(&format!("alpha {:.2}  lambda {:+.6}\n", r.alpha, r.lambda));
            }
        }
        Command::SweepGamma(a) => {
            let grid = settings
                .lookup(a.grid, "grid")?
                .map_or_else(experiments::gamma_grid, |g| g.0);
            let variant = variant(settings, a.variant)?;
            let opts = lyapunov_options(settings, seed, a.horizon, a.washout, a.d0, a.start)?;
            let rows = experiments::sweep_gamma(&grid, variant, &opts)?;
            out.file(
                "sweep_gamma.csv",
                csv(
                    "gamma,lambda_ecp,lambda_tanh",
                    rows.iter().map(|r| {
                        format!(
                            "{},{},{}",
                            float(r.gamma),
                            float(r.lambda_ecp),
                            float(r.lambda_tanh)
                        )
                    }),
                ),
            );
            if a.plot {
                out.file(
                    "sweep_gamma.gp",
                    gnuplot(
                        "sweep_gamma.csv",
                        "gamma",
                        "lambda",
                        &[(1, 2, "linespoints"), (1, 3, "linespoints")],
                        "",
                    ),
                );
            }
            for r in &rows {
                out.summary.push_str(&format!(
                    "gamma {:.2}  ecp {:+.6}  tanh {:+.6}\n",
                    r.gamma, r.lambda_ecp, r.lambda_tanh
                ));
            }
        }
        Command::Forgetting(a) => {
            let input: InputKind = settings
                .get(a.input, "input", "alternating".to_string())?
                .parse()?;
            let d0 = settings.get(a.d0, "d0", 1e-3)?;
            let init = InitMode::parse(
                &settings.get(a.init, "init", "fixed-delta".to_string())?,
                d0,
            )?;
            let default_reps = if input == InputKind::Iid { 8 } else { 1 };
            let opts = ForgettingOptions {
                input,
                amplitude: settings.get(a.amplitude, "amplitude", 1.0)?,
                alpha: settings.get(a.alpha, "alpha", 1.0)?,
                variant: variant(settings, a.variant)?,
                init,
                horizon: settings.get(a.horizon, "horizon", 100_000usize)?,
                replicates: settings.get(a.replicates, "replicates", default_reps)?,
                seed,
            };
            let runs = experiments::forgetting(&opts)?;
            let mut curves = String::from("replicate,t,d\n");
            let mut fits = format!("replicate,seed,{}\n", DecayFit::CSV_HEADER);
            for run in &runs {
                for &(t, d) in run.series.points() {
                    curves.push_str(&format!("{},{t},{}\n", run.replicate, float(d)));
                }
                fits.push_str(&format!(
                    "{},{},{}\n",
                    run.replicate,
                    run.seed,
                    run.fit.csv_row()
                ));
                out.summary.push_str(&format!(
                    "replicate {} (seed {})\n",
                    run.replicate, run.seed
                ));
                out.summary.push_str(&run.fit.report());
            }
            out.file("forgetting.csv", curves);
            out.file("forgetting_fit.csv", fits);
            out.file("forgetting_report.txt", out.summary.clone());
            if a.plot {
                out.file(
                    "forgetting.gp",
                    gnuplot("forgetting.csv", "t", "d", &[(2, 3, "dots")], "xy"),
                );
            }
        }
        Command::CriticalB(a) => {
            let amplitude = settings.get(a.amplitude, "amplitude", FRAC_PI_4)?;
            let cp = solve_critical_b(amplitude)?;
            out.file(
                "critical_b.csv",
                csv(ecp_esn::analysis::CriticalPoint::CSV_HEADER, [cp.csv_row()]),
            );
            out.summary = cp.to_string();
        }
        Command::Lyapunov(a) => {
            let req = LyapunovRequest {
                system: settings
                    .get(a.system, "system", "ecp".to_string())?
                    .parse::<System>()?,
                alpha: settings.get(a.alpha, "alpha", 1.0)?,
                b: settings.lookup(a.b, "b")?,
                variant: variant(settings, a.variant)?,
                input: settings
                    .get(a.input, "input", "alternating".to_string())?
                    .parse()?,
                input_file: settings.lookup(a.input_file, "input-file")?,
                amplitude: settings.lookup(a.amplitude, "amplitude")?,
                gamma: settings.get(a.gamma, "gamma", 1.0)?,
                method: settings
                    .get(a.method, "method", "both".to_string())?
                    .parse::<Method>()?,
                opts: lyapunov_options(settings, seed, a.horizon, a.washout, a.d0, a.start)?,
            };
            let estimates = experiments::lyapunov(&req)?;
            out.file(
                "lyapunov.csv",
                csv(
                    LyapunovEstimate::CSV_HEADER,
                    estimates.iter().map(LyapunovEstimate::csv_row),
                ),
            );
            out.summary = estimates
                .iter()
                .map(LyapunovEstimate::report)
                .collect::<Vec<_>>()
                .join("\n");
        }
        Command::ReadoutDemo(a) => {
            let d = ReadoutOptions::default();
            let opts = ReadoutOptions {
                k: settings.get(a.k, "k", d.k)?,
                delay: settings.get(a.delay, "delay", d.delay)?,
                length: settings.get(a.length, "length", d.length)?,
                amplitude: settings.get(a.amplitude, "amplitude", d.amplitude)?,
                ridge_lambda: settings.get(a.ridge, "ridge", d.ridge_lambda)?,
                washout: settings.get(a.washout, "washout", d.washout)?,
                variant: variant(settings, a.variant)?,
                seed,
            };
            let demo = experiments::readout_demo(&opts)?;
            out.file("readout_model.txt", demo.model.to_kv());
            out.file(
                "readout.csv",
                csv(
                    "t,target,prediction",
                    demo.test_rows
                        .iter()
                        .map(|&(t, y, p)| format!("{t},{},{}", float(y), float(p))),
                ),
            );
            out.summary = format!(
                "delay {} recall, k = {}\ntrain nrmse {}\ntest nrmse  {}\n",
                opts.delay,
                opts.k,
                float(demo.train_nrmse),
                float(demo.test_nrmse)
            );
        }
    }
    Ok(out)
}

/// Parses, runs and writes; the output directory comes from `--out`, the
/// config file, or the working directory.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let settings = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let dir = settings.get(cli.out.clone(), "out", PathBuf::from("."))?;
    let output = execute(cli)?;
    let paths = output.write(&dir)?;
    print!("{}", output.summary);
    Ok(paths)
}
