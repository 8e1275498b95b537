//! Command-line front end: `run` executes an experiment and writes CSVs,
//! `params` prints the derived schedules, `sweep` runs one sweep axis.
//!
//! Exit codes: 0 success, 2 invalid configuration or arguments, 3 I/O error.

use clap::{Args, Parser, Subcommand};
use specmon::adversary::AdversaryKind;
use specmon::algo::Variant;
use specmon::experiment::{
    params_summary, run_experiment, write_outputs, ExperimentError, ExperimentSpec, Overrides,
    Sweep,
};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Parser, Debug)]
#[command(
    name = "specmon",
    version,
    about = "Simulates adversarial spectrum monitoring with batched exponential-weight algorithms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment and write details.csv, aggregate.csv, cdf.csv.
    Run(CommonArgs),
    /// Print the derived parameter schedule per variant without running.
    Params(CommonArgs),
    /// Run a one-axis sweep: each value becomes a cell.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Flat key=value config file; command-line flags win over file values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Algorithm variant (1-4 or name), repeatable or comma-separated.
    #[arg(long, value_delimiter = ',', value_name = "VARIANT")]
    variant: Vec<String>,
    /// Adversary model: fixed, uniform, normal, adaptive.
    #[arg(long, value_name = "KIND")]
    adversary: Option<String>,
    /// Horizon in timeslots.
    #[arg(long = "T", value_name = "SLOTS")]
    horizon: Option<usize>,
    /// Number of channels.
    #[arg(long = "K", value_name = "N")]
    channels: Option<usize>,
    /// Number of radios per slot.
    #[arg(long = "l", value_name = "N")]
    radios: Option<usize>,
    /// Reward per detected misuse.
    #[arg(long = "r", value_name = "REWARD")]
    reward: Option<f64>,
    /// Switching cost per retuned radio.
    #[arg(long, value_name = "COST")]
    cost: Option<f64>,
    /// Detection probability on a monitored channel.
    #[arg(long, value_name = "PROB")]
    pd: Option<f64>,
    /// Number of malicious users.
    #[arg(long, value_name = "N")]
    mus: Option<usize>,
    /// Confidence parameter of the covering-set schedules.
    #[arg(long, value_name = "DELTA")]
    delta: Option<f64>,
    /// Trials per cell.
    #[arg(long, value_name = "N")]
    trials: Option<usize>,
    /// Master seed; every (cell, trial) derives its own child seed.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Batch length override.
    #[arg(long, value_name = "SLOTS")]
    tau: Option<usize>,
    /// Exploration weight override.
    #[arg(long, value_name = "X")]
    gamma: Option<f64>,
    /// Learning rate override.
    #[arg(long, value_name = "X")]
    eta: Option<f64>,
    /// Reward-offset override.
    #[arg(long, value_name = "X")]
    beta: Option<f64>,
    /// Output directory for the CSV files.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Also write each trial's full reward matrix as CSV.
    #[arg(long = "dump-matrix")]
    dump_matrix: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sweep axis: T, tau-exp, pd, l, M, or adversary.
    #[arg(long, value_name = "AXIS")]
    axis: String,
    /// Comma-separated values for the axis.
    #[arg(long, value_delimiter = ',', value_name = "V", required = true)]
    values: Vec<String>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read config file: {0}")]
    ConfigIo(std::io::Error),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::ConfigIo(_) => 3,
            CliError::Experiment(e) => e.exit_code(),
        }
    }
}

/// Everything an experiment can be told, every field optional so that a
/// config file and the flags can be merged with flags winning.
#[derive(Debug, Default)]
struct Settings {
    variants: Option<Vec<Variant>>,
    adversary: Option<AdversaryKind>,
    horizon: Option<usize>,
    channels: Option<usize>,
    radios: Option<usize>,
    reward: Option<f64>,
    cost: Option<f64>,
    pd: Option<f64>,
    mus: Option<usize>,
    delta: Option<f64>,
    trials: Option<usize>,
    seed: Option<u64>,
    tau: Option<usize>,
    gamma: Option<f64>,
    eta: Option<f64>,
    beta: Option<f64>,
    out: Option<PathBuf>,
    workers: Option<usize>,
    dump_matrix: Option<bool>,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid value {:?} for {:?}", value, key)))
}

fn parse_variants(key: &str, values: &[String]) -> Result<Vec<Variant>, CliError> {
    let mut variants = Vec::new();
    for v in values {
        let variant: Variant = parse(key, v)?;
        if !variants.contains(&variant) {
            variants.push(variant);
        }
    }
    Ok(variants)
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Usage(format!(
            "invalid value {:?} for {:?}: expected true or false",
            value, key
        ))),
    }
}

/// Parses a flat key=value config file. Keys are the long flag names;
/// blank lines and `#` comments are ignored; unknown keys are errors.
fn parse_config_file(path: &PathBuf) -> Result<Settings, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::ConfigIo)?;
    let mut s = Settings::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected key=value", lineno + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "variant" => {
                let parts: Vec<String> = value.split(',').map(|p| p.trim().to_string()).collect();
                s.variants = Some(parse_variants(key, &parts)?);
            }
            "adversary" => s.adversary = Some(parse(key, value)?),
            "T" => s.horizon = Some(parse(key, value)?),
            "K" => s.channels = Some(parse(key, value)?),
            "l" => s.radios = Some(parse(key, value)?),
            "r" => s.reward = Some(parse(key, value)?),
            "cost" => s.cost = Some(parse(key, value)?),
            "pd" => s.pd = Some(parse(key, value)?),
            "mus" => s.mus = Some(parse(key, value)?),
            "delta" => s.delta = Some(parse(key, value)?),
            "trials" => s.trials = Some(parse(key, value)?),
            "seed" => s.seed = Some(parse(key, value)?),
            "tau" => s.tau = Some(parse(key, value)?),
            "gamma" => s.gamma = Some(parse(key, value)?),
            "eta" => s.eta = Some(parse(key, value)?),
            "beta" => s.beta = Some(parse(key, value)?),
            "out" => s.out = Some(PathBuf::from(value)),
            "workers" => s.workers = Some(parse(key, value)?),
            "dump-matrix" => s.dump_matrix = Some(parse_bool(key, value)?),
            _ => {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key {:?}",
                    lineno + 1,
                    key
                )))
            }
        }
    }
    Ok(s)
}

fn settings_from_flags(args: &CommonArgs) -> Result<Settings, CliError> {
    Ok(Settings {
        variants: if args.variant.is_empty() {
            None
        } else {
            Some(parse_variants("--variant", &args.variant)?)
        },
        adversary: args
            .adversary
            .as_deref()
            .map(|v| parse("--adversary", v))
            .transpose()?,
        horizon: args.horizon,
        channels: args.channels,
        radios: args.radios,
        reward: args.reward,
        cost: args.cost,
        pd: args.pd,
        mus: args.mus,
        delta: args.delta,
        trials: args.trials,
        seed: args.seed,
        tau: args.tau,
        gamma: args.gamma,
        eta: args.eta,
        beta: args.beta,
        out: args.out.clone(),
        workers: args.workers,
        dump_matrix: args.dump_matrix.then_some(true),
    })
}

/// Lays flag settings over file settings over the defaults.
fn build_spec(args: &CommonArgs, sweep: Option<Sweep>) -> Result<ExperimentSpec, CliError> {
    let file = match &args.config {
        Some(path) => parse_config_file(path)?,
        None => Settings::default(),
    };
    let flags = settings_from_flags(args)?;
    let pick = |a: Option<PathBuf>, b: Option<PathBuf>| a.or(b);

    let mut spec = ExperimentSpec::default();
    if let Some(v) = flags.variants.or(file.variants) {
        spec.variants = v;
    }
    if let Some(v) = flags.adversary.or(file.adversary) {
        spec.adversary = v;
    }
    if let Some(v) = flags.horizon.or(file.horizon) {
        spec.base.horizon = v;
    }
    if let Some(v) = flags.channels.or(file.channels) {
        spec.base.channels = v;
    }
    if let Some(v) = flags.radios.or(file.radios) {
        spec.base.radios = v;
    }
    if let Some(v) = flags.reward.or(file.reward) {
        spec.base.unit_reward = v;
    }
    if let Some(v) = flags.cost.or(file.cost) {
        spec.base.unit_switch_cost = v;
    }
    if let Some(v) = flags.pd.or(file.pd) {
        spec.base.detection_prob = v;
    }
    if let Some(v) = flags.mus.or(file.mus) {
        spec.base.attackers = v;
    }
    if let Some(v) = flags.delta.or(file.delta) {
        spec.base.delta = v;
    }
    if let Some(v) = flags.trials.or(file.trials) {
        spec.base.trials = v;
    }
    if let Some(v) = flags.seed.or(file.seed) {
        spec.base.seed = v;
    }
    spec.overrides = Overrides {
        tau: flags.tau.or(file.tau),
        gamma: flags.gamma.or(file.gamma),
        eta: flags.eta.or(file.eta),
        beta: flags.beta.or(file.beta),
    };
    if let Some(v) = pick(flags.out, file.out) {
        spec.out = v;
    }
    if let Some(v) = flags.workers.or(file.workers) {
        spec.workers = v;
    }
    if let Some(v) = flags.dump_matrix.or(file.dump_matrix) {
        spec.dump_matrices = v;
    }
    spec.sweep = sweep;
    Ok(spec)
}

fn parse_sweep(args: &SweepArgs) -> Result<Sweep, CliError> {
    let values = &args.values;
    let axis = args.axis.as_str();
    let sweep = match axis {
        "T" | "horizon" => Sweep::Horizon(
            values
                .iter()
                .map(|v| parse("--values", v))
                .collect::<Result<_, _>>()?,
        ),
        "tau-exp" | "tau-exponent" => Sweep::TauExponent(
            values
                .iter()
                .map(|v| parse("--values", v))
                .collect::<Result<_, _>>()?,
        ),
        "pd" => Sweep::DetectionProb(
            values
                .iter()
                .map(|v| parse("--values", v))
                .collect::<Result<_, _>>()?,
        ),
        "l" | "radios" => Sweep::Radios(
            values
                .iter()
                .map(|v| parse("--values", v))
                .collect::<Result<_, _>>()?,
        ),
        "M" | "mus" => Sweep::Attackers(
            values
                .iter()
                .map(|v| parse("--values", v))
                .collect::<Result<_, _>>()?,
        ),
        "adversary" => Sweep::Adversary(
            values
                .iter()
                .map(|v| parse("--values", v))
                .collect::<Result<_, _>>()?,
        ),
        _ => {
            return Err(CliError::Usage(format!(
                "unknown sweep axis {:?}; expected T, tau-exp, pd, l, M, or adversary",
                axis
            )))
        }
    };
    Ok(sweep)
}

fn run_and_write(spec: &ExperimentSpec) -> Result<(), CliError> {
    let results = run_experiment(spec)?;
    write_outputs(spec, &results)?;
    let rows: usize = results.iter().map(|r| r.reports.len()).sum();
    println!(
        "wrote {} detail rows across {} cells to {}",
        rows,
        results.len(),
        spec.out.display()
    );
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => run_and_write(&build_spec(&args, None)?),
        Command::Params(args) => {
            let spec = build_spec(&args, None)?;
            print!("{}", params_summary(&spec)?);
            Ok(())
        }
        Command::Sweep(args) => {
            let sweep = parse_sweep(&args)?;
            run_and_write(&build_spec(&args.common, Some(sweep))?)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {}", e);
            std::process::exit(e.code());
        }
    }
}
