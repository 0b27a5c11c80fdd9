//! Command-line interface: estimate factor counts from data files, run
//! Monte Carlo experiments and sweeps, calibrate the gap threshold, and
//! query the Tracy-Widom table.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use spikecount::calibrate::calibrate_constant;
use spikecount::error::Error;
use spikecount::harness::{
    estimate_file, run_experiment, sweep_alpha, AlphaSweepSpec, CChoice, EstimateFileOptions,
    EstimatorKind, ExperimentConfig, GridSpec, ModelSpec, Sigma2Mode, PRESETS,
};
use spikecount::simulate::NoiseLaw;
use spikecount::tracy_widom::{tw1_cdf, tw1_quantile};

#[derive(Parser)]
#[command(
    name = "spikecount",
    version,
    about = "Factor-count estimation for spiked covariance models",
    long_about = "Estimates how many factors (population covariance spikes) underlie \
high-dimensional data, and reproduces the Monte Carlo experiments behind the built-in \
model presets. Rows of input matrices are observations, columns are coordinates."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn preset_help() -> String {
    let mut out = String::from(
        "Model presets (spikes listed as strength x multiplicity; c is the aspect ratio \
p/n the preset is defined at, C its default gap-threshold constant):\n",
    );
    for def in PRESETS {
        let spikes = if def.sweep_extra.is_some() {
            format!(
                "alpha x2 plus a fixed {} (alpha-sweep template)",
                def.sweep_extra.unwrap()
            )
        } else if def.spikes.is_empty() {
            "none (white noise)".to_string()
        } else {
            def.spikes
                .iter()
                .map(|(a, m)| format!("{a}x{m}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let tunings = def
            .tunings
            .iter()
            .map(|(c, cc)| format!("c = {c}: C = {cc}"))
            .collect::<Vec<_>>()
            .join("; ");
        out.push_str(&format!("  {}: {spikes} ({tunings})\n", def.name));
    }
    out
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Gap,
    Tw,
}

impl From<EstimatorArg> for EstimatorKind {
    fn from(value: EstimatorArg) -> Self {
        match value {
            EstimatorArg::Gap => EstimatorKind::Gap,
            EstimatorArg::Tw => EstimatorKind::Tw,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sigma2ModeArg {
    Known,
    Estimated,
}

impl From<Sigma2ModeArg> for Sigma2Mode {
    fn from(value: Sigma2ModeArg) -> Self {
        match value {
            Sigma2ModeArg::Known => Sigma2Mode::Known,
            Sigma2ModeArg::Estimated => Sigma2Mode::Estimated,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NoiseLawArg {
    Gaussian,
    SymmetricSubexponential,
}

impl From<NoiseLawArg> for NoiseLaw {
    fn from(value: NoiseLawArg) -> Self {
        match value {
            NoiseLawArg::Gaussian => NoiseLaw::Gaussian,
            NoiseLawArg::SymmetricSubexponential => NoiseLaw::SymmetricSubexponential,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the factor count of a CSV data matrix.
    Estimate {
        /// CSV file, rows = observations; a header row is auto-detected.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "gap")]
        estimator: EstimatorArg,
        /// Gap-threshold constant: a number, or "auto" to calibrate at the
        /// file's shape (default).
        #[arg(long = "C", default_value = "auto")]
        threshold_const: String,
        /// Significance level for the sequential test.
        #[arg(long, default_value_t = 0.005)]
        gamma: f64,
        /// Known noise variance; omit to estimate it from the data.
        #[arg(long)]
        sigma2: Option<f64>,
        /// Seed for calibration draws.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit JSON instead of plain text.
        #[arg(long)]
        json: bool,
    },
    /// Run a Monte Carlo experiment and emit a CSV rate report.
    #[command(after_help = preset_help())]
    Simulate {
        /// JSON experiment config; exclusive with the inline model flags.
        #[arg(long, conflicts_with_all = ["model", "spikes", "points", "n_grid", "aspect"])]
        config: Option<PathBuf>,
        /// Model preset letter (see below) or "white".
        #[arg(long)]
        model: Option<String>,
        /// Explicit spikes as strength[xmult] list, e.g. "10x1,5x2".
        #[arg(long, conflicts_with = "model")]
        spikes: Option<String>,
        /// Grid as (p, n) pairs, e.g. "3000x300;1500x150".
        #[arg(long)]
        points: Option<String>,
        /// Sample sizes, e.g. "150,300,500,700"; requires --aspect.
        #[arg(long, conflicts_with = "points", requires = "aspect")]
        n_grid: Option<String>,
        /// Aspect ratio c = p/n for --n-grid.
        #[arg(long)]
        aspect: Option<f64>,
        /// Estimators to run.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [EstimatorArg::Gap])]
        estimators: Vec<EstimatorArg>,
        /// Gap-threshold constant: number or "auto"; omit for the preset default.
        #[arg(long = "C")]
        threshold_const: Option<String>,
        #[arg(long, default_value_t = 0.005)]
        gamma: f64,
        #[arg(long, value_enum, default_value = "known")]
        sigma2_mode: Sigma2ModeArg,
        /// Population noise variance.
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        #[arg(long, default_value_t = 500)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "gaussian")]
        noise_law: NoiseLawArg,
        /// Worker threads; 0 picks the library default.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Blank the timing column so output is byte-reproducible.
        #[arg(long)]
        canonical: bool,
    },
    /// Sweep factor strength at a fixed shape and report rates per alpha.
    Sweep {
        /// "E", "F", or "single" (one swept factor).
        #[arg(long)]
        model: String,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        n: usize,
        /// Explicit sweep values, e.g. "0.5,1,1.5".
        #[arg(long)]
        alphas: Option<String>,
        /// Range as start:stop:step, inclusive of both ends.
        #[arg(long, conflicts_with = "alphas")]
        alpha_range: Option<String>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [EstimatorArg::Gap])]
        estimators: Vec<EstimatorArg>,
        #[arg(long = "C")]
        threshold_const: Option<String>,
        #[arg(long, default_value_t = 0.005)]
        gamma: f64,
        #[arg(long, value_enum, default_value = "known")]
        sigma2_mode: Sigma2ModeArg,
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        #[arg(long, default_value_t = 500)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "gaussian")]
        noise_law: NoiseLawArg,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        canonical: bool,
    },
    /// Calibrate the gap-threshold constant for a data shape.
    Calibrate {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 500)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Query the Tracy-Widom (order 1) table.
    Twq {
        /// Upper-tail probability; prints the quantile s with
        /// P(TW1 > s) = gamma.
        #[arg(long, default_value_t = 0.005)]
        gamma: f64,
        /// Print the CDF at this point instead of a quantile.
        #[arg(long)]
        cdf: Option<f64>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version ride the error path but are not failures
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(classify(&e));
    }
}

/// Exit codes: 1 for parameter problems, 2 for input-data problems, 3 for
/// numerical failures.
fn classify(e: &Error) -> i32 {
    match e {
        Error::Numerical { .. } => 3,
        Error::Io(_)
        | Error::BadMatrix(_)
        | Error::BadCell { .. }
        | Error::BadTable(_)
        | Error::SampleSize { .. }
        | Error::ShortSpectrum { .. } => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> spikecount::Result<()> {
    match cli.command {
        Command::Estimate {
            input,
            estimator,
            threshold_const,
            gamma,
            sigma2,
            seed,
            json,
        } => {
            let options = EstimateFileOptions {
                estimator: estimator.into(),
                threshold_const: match parse_c_choice(&threshold_const)? {
                    CChoice::Fixed(v) => Some(v),
                    CChoice::Keyword(_) => None,
                },
                gamma,
                sigma2,
                seed,
            };
            let estimate = estimate_file(&input, &options)?;
            if json {
                println!("{}", estimate.to_json());
            } else {
                print!("{}", estimate.to_text());
            }
            Ok(())
        }
        Command::Simulate {
            config,
            model,
            spikes,
            points,
            n_grid,
            aspect,
            estimators,
            threshold_const,
            gamma,
            sigma2_mode,
            sigma2,
            reps,
            seed,
            noise_law,
            workers,
            out,
            canonical,
        } => {
            let config = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)?;
                    ExperimentConfig::from_json(&text)?
                }
                None => {
                    let model = parse_model(model.as_deref(), spikes.as_deref())?;
                    let grid = parse_grid(points.as_deref(), n_grid.as_deref(), aspect)?;
                    ExperimentConfig {
                        model,
                        grid,
                        estimators: estimators.into_iter().map(Into::into).collect(),
                        threshold_const: threshold_const
                            .as_deref()
                            .map(parse_c_choice)
                            .transpose()?,
                        gamma,
                        sigma2_mode: sigma2_mode.into(),
                        sigma2,
                        reps,
                        master_seed: seed,
                        noise_law: noise_law.into(),
                        workers,
                    }
                }
            };
            let report = run_experiment(&config)?;
            emit_csv(
                if canonical {
                    report.canonical_csv()
                } else {
                    report.to_csv()
                },
                out.as_deref(),
            )
        }
        Command::Sweep {
            model,
            p,
            n,
            alphas,
            alpha_range,
            estimators,
            threshold_const,
            gamma,
            sigma2_mode,
            sigma2,
            reps,
            seed,
            noise_law,
            workers,
            out,
            canonical,
        } => {
            let alphas = match (alphas, alpha_range) {
                (Some(list), None) => parse_f64_list(&list)?,
                (None, Some(range)) => parse_alpha_range(&range)?,
                (None, None) => {
                    return Err(Error::Config(
                        "sweep needs --alphas or --alpha-range".into(),
                    ))
                }
                (Some(_), Some(_)) => unreachable!("clap conflict"),
            };
            let model = match model.as_str() {
                "single" => ModelSpec::Custom {
                    spikes: vec![(1.0, 1)],
                },
                other => ModelSpec::Preset(other.to_string()),
            };
            let config = ExperimentConfig {
                model,
                grid: GridSpec::AlphaSweep {
                    alpha_sweep: AlphaSweepSpec { p, n, alphas },
                },
                estimators: estimators.into_iter().map(Into::into).collect(),
                threshold_const: threshold_const.as_deref().map(parse_c_choice).transpose()?,
                gamma,
                sigma2_mode: sigma2_mode.into(),
                sigma2,
                reps,
                master_seed: seed,
                noise_law: noise_law.into(),
                workers,
            };
            let report = sweep_alpha(&config)?;
            emit_csv(
                if canonical {
                    report.canonical_csv()
                } else {
                    report.to_csv()
                },
                out.as_deref(),
            )
        }
        Command::Calibrate { p, n, reps, seed } => {
            let cal = calibrate_constant(p, n, reps, seed)?;
            println!("s_hat {}", cal.s_hat);
            println!("C_tilde {}", cal.c_tilde);
            Ok(())
        }
        Command::Twq { gamma, cdf } => {
            match cdf {
                Some(s) => println!("{}", tw1_cdf(s)),
                None => println!("{}", tw1_quantile(gamma)?),
            }
            Ok(())
        }
    }
}

fn emit_csv(csv: String, out: Option<&std::path::Path>) -> spikecount::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, csv)?;
            Ok(())
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn parse_c_choice(text: &str) -> spikecount::Result<CChoice> {
    if text == "auto" {
        return Ok(CChoice::Keyword("auto".into()));
    }
    text.parse::<f64>()
        .map(CChoice::Fixed)
        .map_err(|_| Error::Config(format!("C must be a number or \"auto\", got {text:?}")))
}

fn parse_model(model: Option<&str>, spikes: Option<&str>) -> spikecount::Result<ModelSpec> {
    match (model, spikes) {
        (Some("white"), None) => Ok(ModelSpec::Custom { spikes: vec![] }),
        (Some(name), None) => Ok(ModelSpec::Preset(name.to_string())),
        (None, Some(list)) => Ok(ModelSpec::Custom {
            spikes: parse_spikes(list)?,
        }),
        (None, None) => Err(Error::Config(
            "simulate needs --config, --model, or --spikes".into(),
        )),
        (Some(_), Some(_)) => unreachable!("clap conflict"),
    }
}

fn parse_spikes(text: &str) -> spikecount::Result<Vec<(f64, usize)>> {
    text.split(',')
        .map(|item| {
            let item = item.trim();
            let (strength, mult) = match item.split_once('x') {
                Some((s, m)) => (
                    s.parse::<f64>(),
                    m.parse::<usize>()
                        .map_err(|_| Error::Config(format!("bad multiplicity in {item:?}")))?,
                ),
                None => (item.parse::<f64>(), 1),
            };
            let strength =
                strength.map_err(|_| Error::Config(format!("bad spike strength in {item:?}")))?;
            Ok((strength, mult))
        })
        .collect()
}

fn parse_grid(
    points: Option<&str>,
    n_grid: Option<&str>,
    aspect: Option<f64>,
) -> spikecount::Result<GridSpec> {
    match (points, n_grid) {
        (Some(text), None) => {
            let points = text
                .split(';')
                .map(|pair| {
                    let (p, n) = pair
                        .trim()
                        .split_once('x')
                        .ok_or_else(|| Error::Config(format!("bad grid point {pair:?}")))?;
                    Ok((
                        p.parse()
                            .map_err(|_| Error::Config(format!("bad p in {pair:?}")))?,
                        n.parse()
                            .map_err(|_| Error::Config(format!("bad n in {pair:?}")))?,
                    ))
                })
                .collect::<spikecount::Result<Vec<(usize, usize)>>>()?;
            Ok(GridSpec::Points { points })
        }
        (None, Some(text)) => Ok(GridSpec::NGrid {
            n_values: text
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad sample size {v:?}")))
                })
                .collect::<spikecount::Result<Vec<usize>>>()?,
            c: aspect.expect("clap requires --aspect with --n-grid"),
        }),
        (None, None) => Err(Error::Config(
            "simulate needs a grid: --points or --n-grid with --aspect".into(),
        )),
        (Some(_), Some(_)) => unreachable!("clap conflict"),
    }
}

fn parse_f64_list(text: &str) -> spikecount::Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad number {v:?}")))
        })
        .collect()
}

fn parse_alpha_range(text: &str) -> spikecount::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "alpha range must be start:stop:step, got {text:?}"
        )));
    }
    let nums = parts
        .iter()
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number {v:?} in alpha range")))
        })
        .collect::<spikecount::Result<Vec<f64>>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || stop < start {
        return Err(Error::Config(format!("empty alpha range {text:?}")));
    }
    let mut alphas = Vec::new();
    let count = ((stop - start) / step).round() as usize;
    for i in 0..=count {
        let alpha = start + step * i as f64;
        if alpha <= stop + 1e-12 {
            alphas.push(alpha);
        }
    }
    Ok(alphas)
}
