//! Simulation library for adversarial spectrum monitoring under switching
//! costs.
//!
//! A monitor with `radios` tunable receivers watches `channels` channels for
//! transmissions by mobile attackers. Each slot, every attacker picks a
//! channel (or stays silent); a transmission on a monitored channel is
//! detected independently with probability `detection_prob` and earns the
//! monitor `unit_reward`. Retuning a radio between batches costs
//! `unit_switch_cost` per moved radio. The monitor plays one of four
//! batched exponential-weight algorithms over the space of all
//! channel subsets of size `radios`, and is scored by weak regret: the gap
//! to the best fixed subset in hindsight on the same realized rewards.
//!
//! Module map:
//! - [`config`]: scenario parameters and validation.
//! - [`space`]: the strategy space of channel subsets and switching costs.
//! - [`algo`]: the four learners, their parameter schedules, and the
//!   batched episode driver.
//! - [`adversary`]: fixed, uniform, normal, and adaptive attacker models.
//! - [`environment`]: counterfactual reward matrix and slot mechanics.
//! - [`metrics`]: hindsight baselines, regret reports, aggregation.
//! - [`experiment`]: seeded multi-trial runs, sweeps, and CSV output.

pub mod adversary;
pub mod algo;
pub mod config;
pub mod environment;
pub mod experiment;
pub mod metrics;
pub mod space;

pub use adversary::{AdversaryError, AdversaryKind, AdversaryModel, AttackDistribution};
pub use algo::{
    channel_probabilities, run_episode, sample_index, AlgoError, AlgoParams, BatchSchedule,
    CoveringSet, EpisodeError, Learner, Variant,
};
pub use config::{ConfigError, SimConfig};
pub use environment::{EnvError, Environment, RewardMatrix};
pub use experiment::{
    run_experiment, write_outputs, CellResult, ExperimentError, ExperimentSpec, Overrides, Sweep,
};
pub use metrics::{aggregate, best_fixed, regret_report, Aggregate, RegretReport, RunTrace};
pub use space::{binomial, first_slot_cost, SpaceError, Strategy, StrategySpace};
