//! Seeded multi-trial experiment runner with sweeps and CSV output.
//!
//! An experiment is a grid of cells (one per sweep value, or a single cell)
//! times a set of algorithm variants times a number of trials. Every trial
//! derives its own seed from `(master seed, cell, trial)`, so results are
//! reproducible row by row: rerunning with more trials or fewer cells never
//! changes the rows that both runs share. The cell seed deliberately ignores
//! the variant, so all variants face identical adversary and detection
//! randomness within a trial.
//!
//! Output is three CSV files: `details.csv` (one row per trial),
//! `aggregate.csv` (one row per cell and variant), and `cdf.csv` (the
//! empirical first-detection CDF, one row per distinct detection slot).

use crate::adversary::{AdversaryError, AdversaryKind, AdversaryModel};
use crate::algo::{round_tau, run_episode, AlgoError, AlgoParams, CoveringSet, EpisodeError, Variant};
use crate::config::{ConfigError, SimConfig};
use crate::environment::{Environment, RewardMatrix};
use crate::metrics::{aggregate, regret_report, Aggregate, MetricsError, RegretReport};
use crate::space::{first_slot_cost, SpaceError, StrategySpace};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Algo(#[from] AlgoError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("a batch-length sweep cannot be combined with a manual tau override")]
    TauConflict,
    #[error("sweep axis has no values")]
    EmptySweep,
    #[error("no algorithm variants requested")]
    NoVariants,
    #[error("failed to build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl ExperimentError {
    /// Process exit code the CLI maps this error to: 3 for I/O trouble,
    /// 2 for anything wrong with the requested configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Io(_) | ExperimentError::Csv(_) => 3,
            _ => 2,
        }
    }
}

/// Manual parameter overrides; `None` keeps the scheduled value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub tau: Option<usize>,
    pub gamma: Option<f64>,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        *self == Overrides::default()
    }

    fn apply(&self, params: &mut AlgoParams) {
        if let Some(tau) = self.tau {
            params.tau = tau;
        }
        if let Some(gamma) = self.gamma {
            params.gamma = gamma;
        }
        if let Some(eta) = self.eta {
            params.eta = eta;
        }
        if let Some(beta) = self.beta {
            params.beta = beta;
        }
    }

    /// True when the overrides pin every parameter the variant reads, so a
    /// run can proceed even where the closed-form schedule is undefined.
    fn covers(&self, variant: Variant) -> bool {
        let free = match variant {
            Variant::MixUniform => self.gamma.is_some(),
            Variant::Hedge => self.eta.is_some(),
            Variant::CoverReward | Variant::CoverLoss => {
                self.gamma.is_some() && self.eta.is_some() && self.beta.is_some()
            }
        };
        self.tau.is_some() && free
    }
}

/// One sweep axis; each value becomes a cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// Vary the horizon T.
    Horizon(Vec<usize>),
    /// Vary the batch length as tau = round(T^(1/delta)) for each exponent.
    TauExponent(Vec<f64>),
    /// Vary the per-slot detection probability.
    DetectionProb(Vec<f64>),
    /// Vary the number of radios l.
    Radios(Vec<usize>),
    /// Vary the number of attackers M.
    Attackers(Vec<usize>),
    /// Vary the adversary model.
    Adversary(Vec<AdversaryKind>),
}

impl Sweep {
    fn len(&self) -> usize {
        match self {
            Sweep::Horizon(v) => v.len(),
            Sweep::TauExponent(v) => v.len(),
            Sweep::DetectionProb(v) => v.len(),
            Sweep::Radios(v) => v.len(),
            Sweep::Attackers(v) => v.len(),
            Sweep::Adversary(v) => v.len(),
        }
    }
}

/// Full description of an experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub base: SimConfig,
    pub variants: Vec<Variant>,
    pub adversary: AdversaryKind,
    pub overrides: Overrides,
    pub sweep: Option<Sweep>,
    /// Worker threads; 0 picks the machine default.
    pub workers: usize,
    pub out: PathBuf,
    /// Also write each trial's full reward matrix next to the CSVs.
    pub dump_matrices: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            base: SimConfig::default(),
            variants: vec![Variant::Hedge, Variant::CoverReward],
            adversary: AdversaryKind::Adaptive,
            overrides: Overrides::default(),
            sweep: None,
            workers: 0,
            out: PathBuf::from("out"),
            dump_matrices: false,
        }
    }
}

/// A resolved sweep cell: the scenario one group of trials runs under.
#[derive(Debug, Clone)]
struct CellPlan {
    index: usize,
    config: SimConfig,
    kind: AdversaryKind,
    /// Batch length forced by a `Sweep::TauExponent` cell.
    sweep_tau: Option<usize>,
    space: StrategySpace,
}

/// Results of every trial of one (cell, variant) pair, in trial order.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: usize,
    pub variant: Variant,
    pub adversary: AdversaryKind,
    pub config: SimConfig,
    pub params: AlgoParams,
    pub seeds: Vec<u64>,
    pub reports: Vec<RegretReport>,
    pub aggregate: Aggregate,
}

const SEED_DOMAIN: u64 = u64::from_be_bytes(*b"specmon\0");
const STREAM_LEARNER: u64 = 0;
const STREAM_ADVERSARY: u64 = 1;
const STREAM_DETECTION: u64 = 2;
const STREAM_COVERING: u64 = 3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of one trial from the master seed. The variant is
/// deliberately absent: variants share the adversary and detection
/// randomness of a trial so their scores are paired.
pub fn child_seed(master: u64, cell: u64, trial: u64) -> u64 {
    let mut state = splitmix64(master ^ SEED_DOMAIN);
    state = splitmix64(state ^ cell);
    splitmix64(state ^ trial)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Expands the spec's sweep axis into per-cell plans. Cell 0 is the base
/// scenario when there is no sweep.
fn plan_cells(spec: &ExperimentSpec) -> Result<Vec<CellPlan>, ExperimentError> {
    if spec.variants.is_empty() {
        return Err(ExperimentError::NoVariants);
    }
    if let Some(sweep) = &spec.sweep {
        if sweep.len() == 0 {
            return Err(ExperimentError::EmptySweep);
        }
        if matches!(sweep, Sweep::TauExponent(_)) && spec.overrides.tau.is_some() {
            return Err(ExperimentError::TauConflict);
        }
    }
    let cells = spec.sweep.as_ref().map_or(1, Sweep::len);
    let mut plans = Vec::with_capacity(cells);
    for index in 0..cells {
        let mut config = spec.base.clone();
        let mut kind = spec.adversary;
        let mut sweep_tau = None;
        match &spec.sweep {
            None => {}
            Some(Sweep::Horizon(v)) => config.horizon = v[index],
            Some(Sweep::TauExponent(v)) => {
                let t = config.horizon as f64;
                sweep_tau = Some(round_tau(t.powf(1.0 / v[index]), config.horizon));
            }
            Some(Sweep::DetectionProb(v)) => config.detection_prob = v[index],
            Some(Sweep::Radios(v)) => config.radios = v[index],
            Some(Sweep::Attackers(v)) => config.attackers = v[index],
            Some(Sweep::Adversary(v)) => kind = v[index],
        }
        config.validate()?;
        let space = StrategySpace::new(config.channels, config.radios)?;
        plans.push(CellPlan {
            index,
            config,
            kind,
            sweep_tau,
            space,
        });
    }
    Ok(plans)
}

/// Resolves the parameters one trial runs with: the closed-form schedule,
/// then sweep and manual overrides on top. When the horizon is below the
/// schedule's threshold but the overrides pin every parameter the variant
/// needs, the schedule is skipped entirely.
fn build_params(
    variant: Variant,
    space: &StrategySpace,
    covering: Option<&CoveringSet>,
    config: &SimConfig,
    sweep_tau: Option<usize>,
    overrides: &Overrides,
) -> Result<AlgoParams, ExperimentError> {
    let mut effective = overrides.clone();
    if let Some(tau) = sweep_tau {
        effective.tau = Some(tau);
    }
    let scheduled = AlgoParams::for_variant(
        variant,
        space,
        covering,
        config.unit_reward,
        config.delta,
        config.horizon,
    );
    let mut params = match scheduled {
        Ok(params) => params,
        Err(AlgoError::HorizonTooSmall { .. }) if effective.covers(variant) => AlgoParams {
            variant,
            tau: 1,
            gamma: 0.0,
            eta: 0.0,
            beta: 0.0,
        },
        Err(e) => return Err(e.into()),
    };
    if effective == Overrides::default() {
        return Ok(params);
    }
    effective.apply(&mut params);
    params.validate(space, covering, config.horizon, config.unit_reward)?;
    Ok(params)
}

struct TrialOutcome {
    params: AlgoParams,
    seed: u64,
    report: RegretReport,
}

fn run_trial(
    plan: &CellPlan,
    variant: Variant,
    trial: usize,
    master_seed: u64,
    overrides: &Overrides,
    dump_dir: Option<&Path>,
) -> Result<TrialOutcome, ExperimentError> {
    let config = &plan.config;
    let seed = child_seed(master_seed, plan.index as u64, trial as u64);

    let covering = if variant.uses_covering() {
        let mut cov_rng = stream_rng(seed, STREAM_COVERING);
        Some(CoveringSet::random(&plan.space, &mut cov_rng))
    } else {
        None
    };
    let params = build_params(
        variant,
        &plan.space,
        covering.as_ref(),
        config,
        plan.sweep_tau,
        overrides,
    )?;

    // The adversary draws its initial state from the front of its stream
    // and keeps consuming the same stream during the run.
    let mut adv_rng = stream_rng(seed, STREAM_ADVERSARY);
    let adversary = AdversaryModel::init(plan.kind, config, &mut adv_rng)?;
    let det_rng = stream_rng(seed, STREAM_DETECTION);
    let env = Environment::new(config, adversary, adv_rng, det_rng);

    let mut learner_rng = stream_rng(seed, STREAM_LEARNER);
    let trace = run_episode(&params, &plan.space, covering, env, &mut learner_rng)?;
    let report = regret_report(&trace, &plan.space, first_slot_cost(config));

    if let Some(dir) = dump_dir {
        let name = format!(
            "matrix_c{}_v{}_t{}.csv",
            plan.index,
            variant.index(),
            trial
        );
        write_matrix_csv(&dir.join(name), &trace.matrix)?;
    }

    Ok(TrialOutcome {
        params,
        seed,
        report,
    })
}

/// Runs every (cell, variant, trial) job, in parallel up to `spec.workers`
/// threads, and returns per-(cell, variant) results ordered by cell then
/// variant. Matrix dumps are written as a side effect when enabled.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<CellResult>, ExperimentError> {
    let plans = plan_cells(spec)?;
    let trials = spec.base.trials;
    let dump_dir = if spec.dump_matrices {
        fs::create_dir_all(&spec.out)?;
        Some(spec.out.as_path())
    } else {
        None
    };

    let mut jobs = Vec::with_capacity(plans.len() * spec.variants.len() * trials);
    for plan in &plans {
        for &variant in &spec.variants {
            for trial in 0..trials {
                jobs.push((plan, variant, trial));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()?;
    let outcomes: Vec<TrialOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|&(plan, variant, trial)| {
                run_trial(plan, variant, trial, spec.base.seed, &spec.overrides, dump_dir)
            })
            .collect::<Result<_, _>>()
    })?;

    // Jobs were laid out cell-major, then variant, then trial; regroup.
    let mut results = Vec::with_capacity(plans.len() * spec.variants.len());
    let mut it = outcomes.into_iter();
    for plan in &plans {
        for &variant in &spec.variants {
            let mut seeds = Vec::with_capacity(trials);
            let mut reports = Vec::with_capacity(trials);
            let mut params = None;
            for _ in 0..trials {
                let outcome = it.next().expect("one outcome per job");
                params.get_or_insert(outcome.params);
                seeds.push(outcome.seed);
                reports.push(outcome.report);
            }
            let aggregate = aggregate(&reports)?;
            results.push(CellResult {
                cell: plan.index,
                variant,
                adversary: plan.kind,
                config: plan.config.clone(),
                params: params.expect("at least one trial"),
                seeds,
                reports,
                aggregate,
            });
        }
    }
    Ok(results)
}

/// Formats a float the way all CSV output does: shortest representation
/// that round-trips, so identical values always print identically.
fn num(x: f64) -> String {
    format!("{}", x)
}

pub const DETAIL_COLUMNS: [&str; 23] = [
    "variant",
    "adversary",
    "K",
    "l",
    "r",
    "unit_cost",
    "p_d",
    "M",
    "T",
    "tau",
    "gamma",
    "eta",
    "beta",
    "trial",
    "seed",
    "G_alg",
    "L_alg",
    "U_alg",
    "G_best",
    "U_best",
    "weak_regret",
    "normalized_regret",
    "first_detection_slot",
];

fn detail_record(result: &CellResult, trial: usize) -> Vec<String> {
    let c = &result.config;
    let p = &result.params;
    let r = &result.reports[trial];
    vec![
        result.variant.index().to_string(),
        result.adversary.to_string(),
        c.channels.to_string(),
        c.radios.to_string(),
        num(c.unit_reward),
        num(c.unit_switch_cost),
        num(c.detection_prob),
        c.attackers.to_string(),
        c.horizon.to_string(),
        p.tau.to_string(),
        num(p.gamma),
        num(p.eta),
        num(p.beta),
        trial.to_string(),
        result.seeds[trial].to_string(),
        num(r.reward),
        num(r.switching_cost),
        num(r.utility),
        num(r.best_reward),
        num(r.best_utility),
        num(r.weak_regret),
        num(r.normalized_regret),
        r.first_detection.map_or(String::new(), |t| (t + 1).to_string()),
    ]
}

const AGGREGATE_COLUMNS: [&str; 23] = [
    "cell",
    "variant",
    "adversary",
    "K",
    "l",
    "r",
    "unit_cost",
    "p_d",
    "M",
    "T",
    "tau",
    "gamma",
    "eta",
    "beta",
    "trials",
    "mean_utility",
    "std_utility",
    "mean_weak_regret",
    "std_weak_regret",
    "mean_normalized_regret",
    "std_normalized_regret",
    "never_detected_fraction",
    "median_detection_slot",
];

fn aggregate_record(result: &CellResult) -> Vec<String> {
    let c = &result.config;
    let p = &result.params;
    let a = &result.aggregate;
    vec![
        result.cell.to_string(),
        result.variant.index().to_string(),
        result.adversary.to_string(),
        c.channels.to_string(),
        c.radios.to_string(),
        num(c.unit_reward),
        num(c.unit_switch_cost),
        num(c.detection_prob),
        c.attackers.to_string(),
        c.horizon.to_string(),
        p.tau.to_string(),
        num(p.gamma),
        num(p.eta),
        num(p.beta),
        a.trials.to_string(),
        num(a.mean_utility),
        num(a.std_utility),
        num(a.mean_weak_regret),
        num(a.std_weak_regret),
        num(a.mean_normalized_regret),
        num(a.std_normalized_regret),
        num(a.never_detected),
        a.detection_quantile(0.5)
            .map_or(String::new(), |s| s.to_string()),
    ]
}

/// Writes `details.csv`, `aggregate.csv`, and `cdf.csv` under the spec's
/// output directory.
pub fn write_outputs(spec: &ExperimentSpec, results: &[CellResult]) -> Result<(), ExperimentError> {
    fs::create_dir_all(&spec.out)?;

    let mut details = csv::Writer::from_path(spec.out.join("details.csv"))?;
    details.write_record(DETAIL_COLUMNS)?;
    for result in results {
        for trial in 0..result.reports.len() {
            details.write_record(detail_record(result, trial))?;
        }
    }
    details.flush()?;

    let mut agg = csv::Writer::from_path(spec.out.join("aggregate.csv"))?;
    agg.write_record(AGGREGATE_COLUMNS)?;
    for result in results {
        agg.write_record(aggregate_record(result))?;
    }
    agg.flush()?;

    let mut cdf = csv::Writer::from_path(spec.out.join("cdf.csv"))?;
    cdf.write_record(["cell", "variant", "slot", "fraction"])?;
    for result in results {
        for &(slot, fraction) in &result.aggregate.detection_cdf {
            cdf.write_record([
                result.cell.to_string(),
                result.variant.index().to_string(),
                slot.to_string(),
                num(fraction),
            ])?;
        }
    }
    cdf.flush()?;
    Ok(())
}

fn write_matrix_csv(path: &Path, matrix: &RewardMatrix) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["slot".to_string()];
    header.extend((0..matrix.channels()).map(|k| format!("ch{}", k)));
    w.write_record(&header)?;
    let mut row = vec![String::new(); matrix.channels() + 1];
    for t in 0..matrix.horizon() {
        row[0] = t.to_string();
        for k in 0..matrix.channels() {
            row[k + 1] = num(matrix.get(t, k));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Renders the parameter table the `params` subcommand prints: the derived
/// schedule of each requested variant at the spec's configuration, without
/// running anything. Variants whose horizon threshold is not met get a
/// warning line instead of numbers.
pub fn params_summary(spec: &ExperimentSpec) -> Result<String, ExperimentError> {
    spec.base.validate()?;
    let config = &spec.base;
    let space = StrategySpace::new(config.channels, config.radios)?;
    let covering = canonical_covering(&space);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "K={} l={} S={} C={} T={} delta={} r={} cost={} p_d={} M={}",
        config.channels,
        config.radios,
        space.len(),
        covering.len(),
        config.horizon,
        num(config.delta),
        num(config.unit_reward),
        num(config.unit_switch_cost),
        num(config.detection_prob),
        config.attackers,
    );
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<16} {:>8} {:>12} {:>12} {:>12}",
        "variant", "tau", "gamma", "eta", "beta"
    );
    let mut warnings = Vec::new();
    for &variant in &spec.variants {
        let built = build_params(
            variant,
            &space,
            Some(&covering),
            config,
            None,
            &spec.overrides,
        );
        match built {
            Ok(p) => {
                let fmt = |v: f64, used: bool| {
                    if used {
                        format!("{:.6}", v)
                    } else {
                        "-".to_string()
                    }
                };
                let (g, e, b) = match variant {
                    Variant::MixUniform => (true, false, false),
                    Variant::Hedge => (false, true, false),
                    Variant::CoverReward | Variant::CoverLoss => (true, true, true),
                };
                let _ = writeln!(
                    out,
                    "{:<16} {:>8} {:>12} {:>12} {:>12}",
                    format!("{} {}", variant.index(), variant),
                    p.tau,
                    fmt(p.gamma, g),
                    fmt(p.eta, e),
                    fmt(p.beta, b),
                );
            }
            Err(ExperimentError::Algo(AlgoError::HorizonTooSmall { minimum, .. })) => {
                let _ = writeln!(
                    out,
                    "{:<16} {:>8} {:>12} {:>12} {:>12}",
                    format!("{} {}", variant.index(), variant),
                    "-",
                    "-",
                    "-",
                    "-",
                );
                warnings.push(format!(
                    "warning: variant {} ({}) needs horizon >= {:.0} slots, have {}; no schedule",
                    variant.index(),
                    variant,
                    minimum.ceil(),
                    config.horizon,
                ));
            }
            Err(e) => return Err(e),
        }
    }
    for w in warnings {
        let _ = writeln!(out, "{}", w);
    }
    Ok(out)
}

/// A deterministic covering set (channels in index order, the short tail
/// padded from the front); used where only the covering size matters.
fn canonical_covering(space: &StrategySpace) -> CoveringSet {
    let channels = space.channels();
    let radios = space.radios();
    let mut members = Vec::new();
    let mut start = 0;
    while start < channels {
        let mut chunk: Vec<usize> = (start..(start + radios).min(channels)).collect();
        let mut pad = 0;
        while chunk.len() < radios {
            chunk.push(pad);
            pad += 1;
        }
        chunk.sort_unstable();
        members.push(space.id_of(&chunk).expect("valid subset"));
        start += radios;
    }
    CoveringSet::from_members(space, members).expect("covers every channel")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ExperimentSpec {
        ExperimentSpec {
            base: SimConfig {
                channels: 5,
                radios: 2,
                horizon: 400,
                trials: 3,
                seed: 7,
                ..SimConfig::default()
            },
            variants: vec![Variant::Hedge, Variant::CoverReward],
            adversary: AdversaryKind::Uniform,
            overrides: Overrides {
                tau: Some(5),
                gamma: Some(0.2),
                eta: Some(0.01),
                beta: Some(0.05),
            },
            sweep: None,
            workers: 2,
            out: PathBuf::from("unused"),
            dump_matrices: false,
        }
    }

    #[test]
    fn child_seed_is_deterministic_and_spread_out() {
        assert_eq!(child_seed(42, 0, 0), child_seed(42, 0, 0));
        let mut seeds = vec![];
        for cell in 0..4 {
            for trial in 0..50 {
                seeds.push(child_seed(42, cell, trial));
            }
        }
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 200, "collisions in child seeds");
        assert_ne!(child_seed(42, 0, 1), child_seed(43, 0, 1));
    }

    #[test]
    fn run_experiment_is_reproducible_and_accounted() {
        let spec = small_spec();
        let first = run_experiment(&spec).unwrap();
        let second = run_experiment(&spec).unwrap();
        assert_eq!(first.len(), 2);
        for (a, b) in first.iter().zip(&second) {
            assert_eq!(a.reports, b.reports);
            assert_eq!(a.seeds, b.seeds);
        }
        for result in &first {
            assert_eq!(result.reports.len(), 3);
            for report in &result.reports {
                let regret = report.best_utility - report.utility;
                assert!((report.weak_regret - regret).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn extra_trials_extend_rather_than_reshuffle() {
        let mut spec = small_spec();
        let short = run_experiment(&spec).unwrap();
        spec.base.trials = 5;
        let long = run_experiment(&spec).unwrap();
        for (a, b) in short.iter().zip(&long) {
            assert_eq!(a.reports[..], b.reports[..3]);
        }
    }

    #[test]
    fn variants_share_adversary_randomness_within_a_trial() {
        // Same cell and trial, different variants: oblivious adversaries and
        // detection draws coincide, so the hindsight best is identical.
        let spec = small_spec();
        let results = run_experiment(&spec).unwrap();
        for trial in 0..3 {
            assert_eq!(
                results[0].reports[trial].best_reward,
                results[1].reports[trial].best_reward
            );
        }
    }

    #[test]
    fn tau_exponent_sweep_sets_tau_per_cell() {
        let mut spec = small_spec();
        spec.overrides.tau = None;
        spec.sweep = Some(Sweep::TauExponent(vec![2.0, 3.0]));
        spec.base.trials = 1;
        let results = run_experiment(&spec).unwrap();
        // T=400: sqrt = 20, cbrt = 7.368 -> 7.
        assert_eq!(results[0].params.tau, 20);
        assert_eq!(results[2].params.tau, 7);
    }

    #[test]
    fn tau_sweep_conflicts_with_manual_tau() {
        let mut spec = small_spec();
        spec.sweep = Some(Sweep::TauExponent(vec![3.0]));
        assert!(matches!(
            run_experiment(&spec),
            Err(ExperimentError::TauConflict)
        ));
    }

    #[test]
    fn adversary_sweep_runs_each_kind() {
        let mut spec = small_spec();
        spec.variants = vec![Variant::Hedge];
        spec.base.trials = 2;
        spec.sweep = Some(Sweep::Adversary(AdversaryKind::ALL.to_vec()));
        let results = run_experiment(&spec).unwrap();
        let kinds: Vec<AdversaryKind> = results.iter().map(|r| r.adversary).collect();
        assert_eq!(kinds, AdversaryKind::ALL.to_vec());
    }

    #[test]
    fn invalid_cell_config_is_rejected() {
        let mut spec = small_spec();
        // radios = 4 would push r * l = 0.3 * 4 beyond the unit budget.
        spec.sweep = Some(Sweep::Radios(vec![2, 4]));
        assert!(matches!(
            run_experiment(&spec),
            Err(ExperimentError::Config(_))
        ));
    }

    #[test]
    fn schedule_overrides_take_effect() {
        let spec = small_spec();
        let results = run_experiment(&spec).unwrap();
        for result in &results {
            assert_eq!(result.params.tau, 5);
            assert_eq!(result.params.eta, 0.01);
        }
    }

    #[test]
    fn overrides_unlock_short_horizons() {
        // C(5,2) = 10 strategies; hedge needs T >= S ln S / 2 ~ 11.5, so
        // T = 10 has no schedule, but a fully pinned parameter set runs.
        let mut spec = small_spec();
        spec.variants = vec![Variant::Hedge];
        spec.base.horizon = 10;
        spec.base.trials = 1;
        let results = run_experiment(&spec).unwrap();
        assert_eq!(results[0].params.tau, 5);

        spec.overrides.eta = None;
        assert!(matches!(
            run_experiment(&spec),
            Err(ExperimentError::Algo(AlgoError::HorizonTooSmall { .. }))
        ));
    }

    #[test]
    fn csv_outputs_are_written_and_stable() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = small_spec();
        spec.out = dir.path().join("a");
        let results = run_experiment(&spec).unwrap();
        write_outputs(&spec, &results).unwrap();
        let details_a = fs::read(spec.out.join("details.csv")).unwrap();
        let header = String::from_utf8(details_a.clone()).unwrap();
        assert!(header.starts_with(&DETAIL_COLUMNS.join(",")));
        // 2 variants x 3 trials + header.
        assert_eq!(header.lines().count(), 7);

        spec.out = dir.path().join("b");
        let results = run_experiment(&spec).unwrap();
        write_outputs(&spec, &results).unwrap();
        let details_b = fs::read(spec.out.join("details.csv")).unwrap();
        assert_eq!(details_a, details_b);
        assert!(spec.out.join("aggregate.csv").exists());
        assert!(spec.out.join("cdf.csv").exists());
    }

    #[test]
    fn matrix_dump_writes_one_file_per_trial() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = small_spec();
        spec.base.trials = 2;
        spec.base.horizon = 50;
        spec.variants = vec![Variant::Hedge];
        spec.out = dir.path().to_path_buf();
        spec.dump_matrices = true;
        run_experiment(&spec).unwrap();
        assert!(spec.out.join("matrix_c0_v2_t0.csv").exists());
        assert!(spec.out.join("matrix_c0_v2_t1.csv").exists());
        let text = fs::read_to_string(spec.out.join("matrix_c0_v2_t0.csv")).unwrap();
        // Header + one row per slot.
        assert_eq!(text.lines().count(), 51);
        assert!(text.starts_with("slot,ch0,ch1,ch2,ch3,ch4"));
    }

    #[test]
    fn params_summary_prints_schedules_and_warnings() {
        let mut spec = ExperimentSpec {
            variants: vec![
                Variant::MixUniform,
                Variant::Hedge,
                Variant::CoverReward,
                Variant::CoverLoss,
            ],
            ..ExperimentSpec::default()
        };
        let table = params_summary(&spec).unwrap();
        assert!(table.contains("K=10 l=2 S=45 C=5"));
        assert!(table.contains("0.105083"));
        assert!(table.contains("0.005318"));
        assert!(!table.contains("warning"));

        spec.base.horizon = 100;
        let table = params_summary(&spec).unwrap();
        // T = 100 is beyond hedge's threshold (~86) but below mix-uniform's
        // (~295) and both covering variants'.
        assert!(table.contains("warning: variant 1"));
        assert!(table.contains("warning: variant 3"));
        assert!(table.contains("warning: variant 4"));
        // Hedge still gets its schedule: eta = (4 ln S / (S^2 T))^(1/3).
        assert!(table.contains("0.042208"));
    }

    #[test]
    fn canonical_covering_covers_everything() {
        for (k, l) in [(5, 2), (10, 2), (7, 3), (4, 4), (9, 1)] {
            let space = StrategySpace::new(k, l).unwrap();
            let covering = canonical_covering(&space);
            assert_eq!(covering.len(), (k + l - 1) / l);
            for channel in 0..k {
                assert!(covering.channel_count(channel) >= 1);
            }
        }
    }
}
