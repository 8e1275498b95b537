//! Batched exponential-weight learners over the strategy space.
//!
//! All four variants keep one weight per channel instead of one per
//! strategy: every update multiplies individual channel weights, so a
//! strategy's weight is always the product of its channels' weights and
//! probabilities are computed from the factored form. After each batch the
//! weights are divided by their maximum, which leaves every probability
//! unchanged and keeps the products away from overflow.
//!
//! The learners differ in how they explore and in the score fed to the
//! exponential update (`q_k` is the probability that channel `k` is
//! monitored, `avg_k` the batch-average observed reward, zero when
//! unmonitored):
//!
//! * [`Variant::MixUniform`] mixes a uniform draw over all strategies into
//!   the weight-proportional distribution and raises each monitored
//!   channel by `gamma * (avg_k / q_k) / S`.
//! * [`Variant::Hedge`] samples proportionally to the weights alone and
//!   lowers each monitored channel by `eta * (1/l - avg_k) / q_k`; the
//!   score is non-negative because rewards never exceed `1/l`.
//! * [`Variant::CoverReward`] mixes a uniform draw over a covering set and
//!   raises every channel by `eta * (avg_k + beta) / q_k`, a biased
//!   estimate that yields a high-confidence regret guarantee.
//! * [`Variant::CoverLoss`] uses the covering-set mix and lowers every
//!   channel by `eta * ((1/l - avg_k) - beta) / q_k`.

use crate::environment::{Environment, EnvError};
use crate::metrics::RunTrace;
use crate::space::{first_slot_cost, StrategySpace};
use rand::Rng;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgoError {
    #[error("batch length must satisfy 1 <= tau <= horizon, got tau={tau}, horizon={horizon}")]
    BadTau { tau: usize, horizon: usize },
    #[error("horizon {horizon} is below the minimum {minimum:.3} required by the {variant} schedule")]
    HorizonTooSmall {
        variant: Variant,
        horizon: usize,
        minimum: f64,
    },
    #[error("confidence level delta must lie in (0, 1), got {0}")]
    BadDelta(f64),
    #[error("{variant}: parameter {name}={value} outside required range {range}")]
    BadParameter {
        variant: Variant,
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("{0} requires a covering set but none was supplied")]
    MissingCovering(Variant),
    #[error("covering set does not cover channel {0}")]
    IncompleteCovering(usize),
    #[error("weights must be positive and finite")]
    BadWeights,
    #[error("non-finite value encountered in a weight update")]
    Numeric,
}

/// The four learner update rules. See the module docs for the formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    MixUniform,
    Hedge,
    CoverReward,
    CoverLoss,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::MixUniform,
        Variant::Hedge,
        Variant::CoverReward,
        Variant::CoverLoss,
    ];

    /// Stable 1-based index used by the CLI and the CSV output.
    pub fn index(self) -> u8 {
        match self {
            Variant::MixUniform => 1,
            Variant::Hedge => 2,
            Variant::CoverReward => 3,
            Variant::CoverLoss => 4,
        }
    }

    pub fn from_index(index: u8) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.index() == index)
    }

    /// Whether the variant explores through a covering set.
    pub fn uses_covering(self) -> bool {
        matches!(self, Variant::CoverReward | Variant::CoverLoss)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Variant::MixUniform => "mix-uniform",
            Variant::Hedge => "hedge",
            Variant::CoverReward => "cover-reward",
            Variant::CoverLoss => "cover-loss",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" | "mix-uniform" => Ok(Variant::MixUniform),
            "2" | "hedge" => Ok(Variant::Hedge),
            "3" | "cover-reward" => Ok(Variant::CoverReward),
            "4" | "cover-loss" => Ok(Variant::CoverLoss),
            other => Err(format!(
                "unknown variant '{other}', expected 1, 2, 3 or 4 (or mix-uniform, hedge, cover-reward, cover-loss)"
            )),
        }
    }
}

/// Partition of the horizon into batches of `tau` slots; the final batch
/// may be shorter. Slots and batches are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchSchedule {
    horizon: usize,
    tau: usize,
}

impl BatchSchedule {
    pub fn new(horizon: usize, tau: usize) -> Result<Self, AlgoError> {
        if tau < 1 || tau > horizon {
            return Err(AlgoError::BadTau { tau, horizon });
        }
        Ok(BatchSchedule { horizon, tau })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn num_batches(&self) -> usize {
        self.horizon.div_ceil(self.tau)
    }

    /// Slot range covered by `batch`.
    pub fn slots(&self, batch: usize) -> std::ops::Range<usize> {
        let start = batch * self.tau;
        start..(start + self.tau).min(self.horizon)
    }

    pub fn batch_of(&self, slot: usize) -> usize {
        slot / self.tau
    }
}

/// A set of strategies that jointly monitor every channel.
#[derive(Debug, Clone)]
pub struct CoveringSet {
    members: Vec<usize>,
    member_mask: Vec<bool>,
    counts: Vec<usize>,
}

impl CoveringSet {
    /// Builds a random cover: shuffle the channels, cut the permutation
    /// into consecutive blocks of `radios`, and pad the final short block
    /// with distinct channels drawn uniformly from the already covered
    /// ones. Yields `ceil(channels / radios)` members; every channel is
    /// covered, and each member owns at least one channel no other member
    /// has, so no member is redundant.
    pub fn random(space: &StrategySpace, rng: &mut impl Rng) -> Self {
        let k = space.channels();
        let l = space.radios();
        let mut perm: Vec<usize> = (0..k).collect();
        for i in (1..k).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }

        let mut ids = Vec::with_capacity(k.div_ceil(l));
        let mut covered: Vec<usize> = Vec::with_capacity(k);
        for block in perm.chunks(l) {
            let mut channels = block.to_vec();
            if channels.len() < l {
                let mut pool: Vec<usize> = covered.clone();
                while channels.len() < l {
                    let pick = pool.swap_remove(rng.gen_range(0..pool.len()));
                    channels.push(pick);
                }
            }
            channels.sort_unstable();
            ids.push(space.id_of(&channels).expect("block is a valid strategy"));
            covered.extend_from_slice(block);
        }
        Self::from_members(space, ids).expect("construction covers every channel")
    }

    /// Builds a cover from explicit strategy ids, verifying that every
    /// channel is covered.
    pub fn from_members(space: &StrategySpace, members: Vec<usize>) -> Result<Self, AlgoError> {
        let mut member_mask = vec![false; space.len()];
        let mut counts = vec![0usize; space.channels()];
        for &id in &members {
            member_mask[id] = true;
            for &k in space.strategy(id).channels() {
                counts[k] += 1;
            }
        }
        if let Some(k) = counts.iter().position(|&c| c == 0) {
            return Err(AlgoError::IncompleteCovering(k));
        }
        Ok(CoveringSet {
            members,
            member_mask,
            counts,
        })
    }

    /// Number of members.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, id: usize) -> bool {
        self.member_mask[id]
    }

    /// Number of members monitoring `channel`.
    pub fn channel_count(&self, channel: usize) -> usize {
        self.counts[channel]
    }
}

/// Rounds a real-valued batch length to the nearest integer and clamps it
/// into the feasible range `1..=horizon`.
pub fn round_tau(value: f64, horizon: usize) -> usize {
    let rounded = value.round();
    if !(rounded >= 1.0) {
        1
    } else if rounded >= horizon as f64 {
        horizon
    } else {
        rounded as usize
    }
}

/// Tuned constants for one episode. Fields not used by a variant are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoParams {
    pub variant: Variant,
    pub tau: usize,
    pub gamma: f64,
    pub eta: f64,
    pub beta: f64,
}

impl AlgoParams {
    /// Horizon-optimized schedule for [`Variant::MixUniform`]. Requires
    /// `horizon >= (e-1) * S * ln S`.
    pub fn mix_uniform(space: &StrategySpace, horizon: usize) -> Result<Self, AlgoError> {
        let s = space.len() as f64;
        let t = horizon as f64;
        let e1 = std::f64::consts::E - 1.0;
        let minimum = e1 * s * s.ln();
        if t < minimum {
            return Err(AlgoError::HorizonTooSmall {
                variant: Variant::MixUniform,
                horizon,
                minimum,
            });
        }
        let params = if space.len() == 1 {
            AlgoParams {
                variant: Variant::MixUniform,
                tau: horizon,
                gamma: 1.0,
                eta: 0.0,
                beta: 0.0,
            }
        } else {
            AlgoParams {
                variant: Variant::MixUniform,
                tau: round_tau((t / (e1 * s * s.ln())).cbrt(), horizon),
                gamma: (s * s.ln() / (e1 * e1 * t)).cbrt(),
                eta: 0.0,
                beta: 0.0,
            }
        };
        params.validate(space, None, horizon, 0.0)?;
        Ok(params)
    }

    /// Horizon-optimized schedule for [`Variant::Hedge`]. Requires
    /// `horizon >= S * ln S / 2`.
    pub fn hedge(space: &StrategySpace, horizon: usize) -> Result<Self, AlgoError> {
        let s = space.len() as f64;
        let t = horizon as f64;
        let minimum = 0.5 * s * s.ln();
        if t < minimum {
            return Err(AlgoError::HorizonTooSmall {
                variant: Variant::Hedge,
                horizon,
                minimum,
            });
        }
        let params = AlgoParams {
            variant: Variant::Hedge,
            tau: round_tau((2.0 * t / (s * s.ln())).cbrt(), horizon),
            gamma: 0.0,
            eta: (4.0 * s.ln() / (s * s * t)).cbrt(),
            beta: 0.0,
        };
        params.validate(space, None, horizon, 0.0)?;
        Ok(params)
    }

    /// Horizon-optimized schedule for [`Variant::CoverReward`], tuned so
    /// the regret guarantee holds with probability `1 - delta`.
    pub fn cover_reward(
        space: &StrategySpace,
        covering: &CoveringSet,
        delta: f64,
        horizon: usize,
    ) -> Result<Self, AlgoError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(AlgoError::BadDelta(delta));
        }
        let s = space.len() as f64;
        let k = space.channels() as f64;
        let l = space.radios() as f64;
        let c = covering.len() as f64;
        let t = horizon as f64;

        let explore_term = l * c * s.ln();
        let confid_term = (l / k) * (k / delta).ln();
        let b = 4.0 * explore_term.sqrt() + 2.0 * (l * k * (k / delta).ln()).sqrt();
        let minimum = (b * b)
            .max(8.0 * explore_term.powf(1.5) / b)
            .max(confid_term.powf(1.5) / b);
        if t < minimum {
            return Err(AlgoError::HorizonTooSmall {
                variant: Variant::CoverReward,
                horizon,
                minimum,
            });
        }

        let scale = b.powf(-1.0 / 3.0) * t.powf(-1.0 / 3.0);
        let gamma = explore_term.sqrt() * scale;
        // Algebraically sqrt(ln S / (4 l C)) * scale; dividing gamma keeps
        // the exploration identity 2 * eta * l * C == gamma exact.
        let eta = gamma / (2.0 * l * c);
        let params = AlgoParams {
            variant: Variant::CoverReward,
            tau: round_tau(b.powf(-2.0 / 3.0) * t.cbrt(), horizon),
            gamma,
            eta,
            beta: confid_term.sqrt() * scale,
        };
        params.validate(space, Some(covering), horizon, 0.0)?;
        Ok(params)
    }

    /// Horizon-optimized schedule for [`Variant::CoverLoss`], tuned so the
    /// regret guarantee holds with probability `1 - delta`.
    pub fn cover_loss(
        space: &StrategySpace,
        covering: &CoveringSet,
        unit_reward: f64,
        delta: f64,
        horizon: usize,
    ) -> Result<Self, AlgoError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(AlgoError::BadDelta(delta));
        }
        let s = space.len() as f64;
        let k = space.channels() as f64;
        let l = space.radios() as f64;
        let c = covering.len() as f64;
        let t = horizon as f64;

        let b = 2.0 * l * k * (k / delta).ln();
        let denom = 2.0 * l * c + k - l;
        let minimum = b.max(denom.powi(3) * s.ln().powi(3) / (b * b));
        if t < minimum {
            return Err(AlgoError::HorizonTooSmall {
                variant: Variant::CoverLoss,
                horizon,
                minimum,
            });
        }
        let params = AlgoParams {
            variant: Variant::CoverLoss,
            tau: round_tau(t.cbrt() / b.cbrt(), horizon),
            gamma: 2.0 * l * c / denom,
            eta: 2.0 * s.ln() * b.powf(-2.0 / 3.0) / t.cbrt(),
            beta: (1.0 / k) * b.cbrt() / t.cbrt(),
        };
        params.validate(space, Some(covering), horizon, unit_reward)?;
        Ok(params)
    }

    /// Derives the schedule for `variant` from the scenario quantities.
    pub fn for_variant(
        variant: Variant,
        space: &StrategySpace,
        covering: Option<&CoveringSet>,
        unit_reward: f64,
        delta: f64,
        horizon: usize,
    ) -> Result<Self, AlgoError> {
        match variant {
            Variant::MixUniform => Self::mix_uniform(space, horizon),
            Variant::Hedge => Self::hedge(space, horizon),
            Variant::CoverReward => {
                let covering = covering.ok_or(AlgoError::MissingCovering(variant))?;
                Self::cover_reward(space, covering, delta, horizon)
            }
            Variant::CoverLoss => {
                let covering = covering.ok_or(AlgoError::MissingCovering(variant))?;
                Self::cover_loss(space, covering, unit_reward, delta, horizon)
            }
        }
    }

    /// Checks the parameter ranges each variant's guarantee relies on.
    /// A single-strategy space is degenerate (every distribution over it
    /// is the point mass), so only the batch length is checked there.
    pub fn validate(
        &self,
        space: &StrategySpace,
        covering: Option<&CoveringSet>,
        horizon: usize,
        unit_reward: f64,
    ) -> Result<(), AlgoError> {
        if self.tau < 1 || self.tau > horizon {
            return Err(AlgoError::BadTau {
                tau: self.tau,
                horizon,
            });
        }
        for (name, value) in [
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("beta", self.beta),
        ] {
            if !value.is_finite() {
                return Err(AlgoError::BadParameter {
                    variant: self.variant,
                    name,
                    value,
                    range: "finite",
                });
            }
        }
        if space.len() == 1 {
            return Ok(());
        }
        let bad = |name: &'static str, value: f64, range: &'static str| AlgoError::BadParameter {
            variant: self.variant,
            name,
            value,
            range,
        };
        match self.variant {
            Variant::MixUniform => {
                if !(self.gamma > 0.0 && self.gamma <= 1.0) {
                    return Err(bad("gamma", self.gamma, "(0, 1]"));
                }
            }
            Variant::Hedge => {
                if !(self.eta > 0.0) {
                    return Err(bad("eta", self.eta, "(0, inf)"));
                }
            }
            Variant::CoverReward => {
                let covering =
                    covering.ok_or(AlgoError::MissingCovering(self.variant))?;
                if !(self.gamma > 0.0 && self.gamma < 0.5) {
                    return Err(bad("gamma", self.gamma, "(0, 1/2)"));
                }
                if !(self.beta > 0.0 && self.beta < 1.0) {
                    return Err(bad("beta", self.beta, "(0, 1)"));
                }
                if !(self.eta > 0.0) {
                    return Err(bad("eta", self.eta, "(0, inf)"));
                }
                let mix = 2.0 * self.eta * space.radios() as f64 * covering.len() as f64;
                // One ulp of slack; the schedule meets the bound exactly.
                if mix > self.gamma * (1.0 + 1e-12) {
                    return Err(bad("eta", self.eta, "2*eta*l*C <= gamma"));
                }
            }
            Variant::CoverLoss => {
                let covering =
                    covering.ok_or(AlgoError::MissingCovering(self.variant))?;
                if !(self.gamma > 0.0 && self.gamma < 1.0) {
                    return Err(bad("gamma", self.gamma, "(0, 1)"));
                }
                let beta_cap = 1.0 / space.radios() as f64 - unit_reward;
                if !(self.beta > 0.0 && self.beta < beta_cap) {
                    return Err(bad("beta", self.beta, "(0, 1/radios - unit_reward)"));
                }
                let eta_cap = 2.0
                    / (2.0 * space.radios() as f64 * covering.len() as f64
                        + space.channels() as f64
                        - space.radios() as f64);
                if !(self.eta > 0.0 && self.eta < eta_cap) {
                    return Err(bad("eta", self.eta, "(0, 2/(2lC + K - l))"));
                }
            }
        }
        Ok(())
    }
}

/// Probability that each channel is monitored: the sum of the strategy
/// probabilities over the strategies containing it. Sums to `radios`.
pub fn channel_probabilities(space: &StrategySpace, strategy_probs: &[f64]) -> Vec<f64> {
    debug_assert_eq!(strategy_probs.len(), space.len());
    (0..space.channels())
        .map(|k| space.incidence(k).iter().map(|&id| strategy_probs[id]).sum())
        .collect()
}

/// Inverse-CDF draw over `probs`; any residual mass from floating-point
/// rounding falls to the final index.
pub fn sample_index(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    probs.len() - 1
}

/// Learner state: the per-channel weights plus the tuned constants.
#[derive(Debug, Clone)]
pub struct Learner {
    params: AlgoParams,
    weights: Vec<f64>,
    covering: Option<CoveringSet>,
}

impl Learner {
    /// Starts from uniform weights. `covering` is required by the
    /// covering-set variants and ignored by the others.
    pub fn new(
        params: AlgoParams,
        space: &StrategySpace,
        covering: Option<CoveringSet>,
    ) -> Result<Self, AlgoError> {
        if params.variant.uses_covering() && covering.is_none() {
            return Err(AlgoError::MissingCovering(params.variant));
        }
        Ok(Learner {
            params,
            weights: vec![1.0; space.channels()],
            covering,
        })
    }

    pub fn params(&self) -> &AlgoParams {
        &self.params
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn covering(&self) -> Option<&CoveringSet> {
        self.covering.as_ref()
    }

    /// Replaces the weights, e.g. to warm-start an episode.
    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<(), AlgoError> {
        if weights.len() != self.weights.len()
            || weights.iter().any(|w| !(w.is_finite() && *w > 0.0))
        {
            return Err(AlgoError::BadWeights);
        }
        self.weights = weights;
        Ok(())
    }

    /// Distribution over strategies for the next batch.
    pub fn strategy_probabilities(&self, space: &StrategySpace) -> Result<Vec<f64>, AlgoError> {
        let mut probs = vec![0.0; space.len()];
        let mut total = 0.0;
        for (i, s) in space.strategies().iter().enumerate() {
            let mut product = 1.0;
            for &k in s.channels() {
                product *= self.weights[k];
            }
            probs[i] = product;
            total += product;
        }
        if !(total > 0.0 && total.is_finite()) {
            return Err(AlgoError::Numeric);
        }
        match self.params.variant {
            Variant::MixUniform => {
                let uniform = self.params.gamma / space.len() as f64;
                for p in &mut probs {
                    *p = (1.0 - self.params.gamma) * *p / total + uniform;
                }
            }
            Variant::Hedge => {
                for p in &mut probs {
                    *p /= total;
                }
            }
            Variant::CoverReward | Variant::CoverLoss => {
                let covering = self.covering.as_ref().expect("checked at construction");
                let explore = self.params.gamma / covering.len() as f64;
                for (i, p) in probs.iter_mut().enumerate() {
                    *p = (1.0 - self.params.gamma) * *p / total
                        + if covering.contains(i) { explore } else { 0.0 };
                }
            }
        }
        Ok(probs)
    }

    /// Applies one batch's exponential update and renormalizes the weights
    /// to a maximum of 1.
    ///
    /// `avg_rewards` holds the batch-average observed reward per channel
    /// and must be zero outside the chosen strategy; `channel_probs` must
    /// be the monitoring probabilities the batch was sampled from.
    pub fn update(
        &mut self,
        space: &StrategySpace,
        chosen: usize,
        avg_rewards: &[f64],
        channel_probs: &[f64],
    ) -> Result<(), AlgoError> {
        debug_assert_eq!(avg_rewards.len(), space.channels());
        debug_assert_eq!(channel_probs.len(), space.channels());
        debug_assert!(space
            .strategies()
            .get(chosen)
            .map(|s| avg_rewards
                .iter()
                .enumerate()
                .all(|(k, &f)| f == 0.0 || s.contains(k)))
            .unwrap_or(false));

        let inv_radios = 1.0 / space.radios() as f64;
        let p = &self.params;
        match p.variant {
            Variant::MixUniform => {
                let scale = p.gamma / space.len() as f64;
                for &k in space.strategy(chosen).channels() {
                    let q = channel_probs[k];
                    if !(q > 0.0) {
                        return Err(AlgoError::Numeric);
                    }
                    self.weights[k] *= (scale * avg_rewards[k] / q).exp();
                }
            }
            Variant::Hedge => {
                for &k in space.strategy(chosen).channels() {
                    let q = channel_probs[k];
                    if !(q > 0.0) {
                        return Err(AlgoError::Numeric);
                    }
                    let score = (inv_radios - avg_rewards[k]) / q;
                    self.weights[k] *= (-p.eta * score).exp();
                }
            }
            Variant::CoverReward => {
                for k in 0..space.channels() {
                    let q = channel_probs[k];
                    if !(q > 0.0) {
                        return Err(AlgoError::Numeric);
                    }
                    let score = (avg_rewards[k] + p.beta) / q;
                    self.weights[k] *= (p.eta * score).exp();
                }
            }
            Variant::CoverLoss => {
                for k in 0..space.channels() {
                    let q = channel_probs[k];
                    if !(q > 0.0) {
                        return Err(AlgoError::Numeric);
                    }
                    let score = (inv_radios - avg_rewards[k] - p.beta) / q;
                    self.weights[k] *= (-p.eta * score).exp();
                }
            }
        }

        let max = self.weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(max > 0.0 && max.is_finite()) {
            return Err(AlgoError::Numeric);
        }
        for w in &mut self.weights {
            // The floor keeps long streaks of one-sided updates from
            // flushing a weight to zero; it is far below any probability
            // the floor terms produce.
            *w = (*w / max).max(f64::MIN_POSITIVE);
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error(transparent)]
    Algo(#[from] AlgoError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("environment has {env} channels but the space has {space}")]
    ChannelMismatch { env: usize, space: usize },
}

/// Plays one full episode: samples a strategy per batch, pays switching
/// costs, feeds observed rewards back into the learner, and returns the
/// complete trace together with the environment's counterfactual matrix.
pub fn run_episode(
    params: &AlgoParams,
    space: &StrategySpace,
    covering: Option<CoveringSet>,
    mut env: Environment,
    rng: &mut impl Rng,
) -> Result<RunTrace, EpisodeError> {
    let cfg = env.config().clone();
    if cfg.channels != space.channels() {
        return Err(EpisodeError::ChannelMismatch {
            env: cfg.channels,
            space: space.channels(),
        });
    }
    params.validate(
        space,
        covering.as_ref(),
        cfg.horizon,
        cfg.unit_reward,
    )?;
    let schedule = BatchSchedule::new(cfg.horizon, params.tau)?;
    let mut learner = Learner::new(params.clone(), space, covering)?;

    let radios = space.radios();
    let mut chosen = Vec::with_capacity(schedule.num_batches());
    let mut switch_costs = Vec::with_capacity(schedule.num_batches());
    let mut observed = Vec::with_capacity(cfg.horizon * radios);
    let mut first_detection = None;
    let mut slot_obs = vec![0.0; radios];
    let mut avg_rewards = vec![0.0; cfg.channels];

    for batch in 0..schedule.num_batches() {
        let probs = learner.strategy_probabilities(space)?;
        let id = sample_index(&probs, rng);
        let strategy = space.strategy(id);

        let cost = match chosen.last() {
            None => first_slot_cost(&cfg),
            Some(&prev) => space.switching_cost(space.strategy(prev), strategy, cfg.unit_switch_cost),
        };
        chosen.push(id);
        switch_costs.push(cost);

        avg_rewards.iter_mut().for_each(|f| *f = 0.0);
        let slots = schedule.slots(batch);
        let batch_len = slots.len() as f64;
        for t in slots {
            env.step(t, strategy, &mut slot_obs)?;
            for (i, &k) in strategy.channels().iter().enumerate() {
                avg_rewards[k] += slot_obs[i];
                if first_detection.is_none() && slot_obs[i] > 0.0 {
                    first_detection = Some(t);
                }
            }
            observed.extend_from_slice(&slot_obs);
        }
        for &k in strategy.channels() {
            avg_rewards[k] /= batch_len;
        }

        let q = channel_probabilities(space, &probs);
        learner.update(space, id, &avg_rewards, &q)?;
    }

    Ok(RunTrace {
        tau: params.tau,
        radios,
        chosen,
        switch_costs,
        observed,
        first_detection,
        matrix: env.into_matrix()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::StrategySpace;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn space_10_2() -> StrategySpace {
        StrategySpace::new(10, 2).unwrap()
    }

    #[test]
    fn schedule_partitions_the_horizon() {
        let s = BatchSchedule::new(10, 3).unwrap();
        assert_eq!(s.num_batches(), 4);
        assert_eq!(s.slots(0), 0..3);
        assert_eq!(s.slots(3), 9..10);
        let covered: usize = (0..s.num_batches()).map(|j| s.slots(j).len()).sum();
        assert_eq!(covered, 10);

        let single = BatchSchedule::new(7, 7).unwrap();
        assert_eq!(single.num_batches(), 1);
        let unit = BatchSchedule::new(7, 1).unwrap();
        assert_eq!(unit.num_batches(), 7);

        assert!(BatchSchedule::new(5, 0).is_err());
        assert!(BatchSchedule::new(5, 6).is_err());
    }

    #[test]
    fn mix_uniform_schedule_at_reference_scale() {
        let params = AlgoParams::mix_uniform(&space_10_2(), 50_000).unwrap();
        assert_eq!(params.tau, 6);
        assert!((params.gamma - 0.1051).abs() < 5e-4);
    }

    #[test]
    fn hedge_schedule_at_reference_scale() {
        let params = AlgoParams::hedge(&space_10_2(), 50_000).unwrap();
        assert_eq!(params.tau, 8);
        assert!((params.eta - 5.32e-3).abs() < 5e-6);
    }

    #[test]
    fn hedge_schedule_rejects_short_horizons() {
        // The minimum horizon for 45 strategies is about 85.65.
        let space = space_10_2();
        assert!(matches!(
            AlgoParams::hedge(&space, 85),
            Err(AlgoError::HorizonTooSmall { .. })
        ));
        assert!(AlgoParams::hedge(&space, 86).is_ok());
    }

    #[test]
    fn cover_reward_schedule_at_reference_scale() {
        let space = space_10_2();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let covering = CoveringSet::random(&space, &mut rng);
        assert_eq!(covering.len(), 5);
        let params = AlgoParams::cover_reward(&space, &covering, 0.5, 50_000).unwrap();
        assert_eq!(params.tau, 3);
        assert!((params.gamma - 0.0489).abs() < 5e-5);
        // The exploration identity holds by construction.
        let mix = 2.0 * params.eta * 2.0 * covering.len() as f64;
        assert!((mix - params.gamma).abs() <= 1e-15 * params.gamma);
    }

    #[test]
    fn cover_loss_schedule_at_reference_scale() {
        let space = space_10_2();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let covering = CoveringSet::random(&space, &mut rng);
        let params = AlgoParams::cover_loss(&space, &covering, 0.3, 0.5, 50_000).unwrap();
        assert_eq!(params.gamma, 20.0 / 28.0);
        assert!((params.beta - 0.0134).abs() < 5e-5);
        assert!(params.beta < 1.0 / 2.0 - 0.3);
        assert_eq!(params.tau, 7);
    }

    #[test]
    fn covering_set_is_a_partition_when_radios_divide_channels() {
        let space = space_10_2();
        for seed in 0..20 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let covering = CoveringSet::random(&space, &mut rng);
            assert_eq!(covering.len(), 5);
            for k in 0..10 {
                assert_eq!(covering.channel_count(k), 1);
            }
        }
    }

    #[test]
    fn covering_set_pads_the_short_block() {
        let space = StrategySpace::new(5, 2).unwrap();
        for seed in 0..20 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let covering = CoveringSet::random(&space, &mut rng);
            assert_eq!(covering.len(), 3);
            // Exactly one channel is covered twice (the padded one).
            let doubled: Vec<usize> = (0..5).filter(|&k| covering.channel_count(k) == 2).collect();
            assert_eq!(doubled.len(), 1);
            for k in 0..5 {
                assert!(covering.channel_count(k) >= 1);
            }
        }
    }

    #[test]
    fn covering_set_single_strategy_space() {
        let space = StrategySpace::new(3, 3).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let covering = CoveringSet::random(&space, &mut rng);
        assert_eq!(covering.len(), 1);
        assert_eq!(covering.members(), &[0]);
    }

    #[test]
    fn incomplete_covering_is_rejected() {
        let space = space_10_2();
        let err = CoveringSet::from_members(&space, vec![0, 1]).unwrap_err();
        assert!(matches!(err, AlgoError::IncompleteCovering(_)));
    }

    #[test]
    fn probabilities_sum_to_one_with_uniform_floor() {
        let space = space_10_2();
        let params = AlgoParams::mix_uniform(&space, 50_000).unwrap();
        let gamma = params.gamma;
        let learner = Learner::new(params, &space, None).unwrap();
        let probs = learner.strategy_probabilities(&space).unwrap();
        let total: f64 = probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let floor = gamma / space.len() as f64;
        assert!(probs.iter().all(|&p| p >= floor * (1.0 - 1e-12)));
        // Uniform start: all strategies equally likely.
        assert!(probs.iter().all(|&p| (p - 1.0 / 45.0).abs() < 1e-12));
    }

    #[test]
    fn channel_probabilities_sum_to_radios() {
        let space = space_10_2();
        let params = AlgoParams::hedge(&space, 50_000).unwrap();
        let mut learner = Learner::new(params, &space, None).unwrap();
        learner
            .set_weights((0..10).map(|k| 1.0 / (k + 1) as f64).collect())
            .unwrap();
        let probs = learner.strategy_probabilities(&space).unwrap();
        let q = channel_probabilities(&space, &probs);
        let total: f64 = q.iter().sum();
        assert!((total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_matches_probabilities() {
        let space = StrategySpace::new(4, 2).unwrap();
        let params = AlgoParams {
            variant: Variant::Hedge,
            tau: 1,
            gamma: 0.0,
            eta: 0.1,
            beta: 0.0,
        };
        let mut learner = Learner::new(params, &space, None).unwrap();
        learner
            .set_weights(vec![1.0, 0.5, 0.25, 0.125])
            .unwrap();
        let probs = learner.strategy_probabilities(&space).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let draws = 200_000;
        let mut counts = vec![0usize; space.len()];
        for _ in 0..draws {
            counts[sample_index(&probs, &mut rng)] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / draws as f64;
            let sigma = (probs[i] * (1.0 - probs[i]) / draws as f64).sqrt();
            assert!(
                (freq - probs[i]).abs() < 5.0 * sigma + 1e-9,
                "strategy {i}: freq {freq} vs prob {}",
                probs[i]
            );
        }
    }

    #[test]
    fn residual_mass_falls_to_the_last_index() {
        struct FixedRng(u64);
        impl rand::RngCore for FixedRng {
            fn next_u32(&mut self) -> u32 {
                self.0 as u32
            }
            fn next_u64(&mut self) -> u64 {
                self.0
            }
            fn fill_bytes(&mut self, dest: &mut [u8]) {
                dest.fill(0xFF);
            }
            fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
                dest.fill(0xFF);
                Ok(())
            }
        }
        // u close to 1 exceeds the slightly-short cumulative sum.
        let mut rng = FixedRng(u64::MAX);
        let probs = vec![0.3, 0.3, 0.399_999_999_9];
        assert_eq!(sample_index(&probs, &mut rng), 2);
    }

    #[test]
    fn zero_rewards_leave_mix_uniform_probabilities_unchanged() {
        let space = space_10_2();
        let params = AlgoParams::mix_uniform(&space, 50_000).unwrap();
        let mut learner = Learner::new(params, &space, None).unwrap();
        let before = learner.strategy_probabilities(&space).unwrap();
        for step in 0..5 {
            let probs = learner.strategy_probabilities(&space).unwrap();
            let q = channel_probabilities(&space, &probs);
            let avg = vec![0.0; 10];
            learner.update(&space, step % space.len(), &avg, &q).unwrap();
        }
        let after = learner.strategy_probabilities(&space).unwrap();
        for (b, a) in before.iter().zip(&after) {
            assert!((b - a).abs() < 1e-12);
        }
    }

    #[test]
    fn hedge_weights_never_increase_before_renormalization() {
        let space = space_10_2();
        let params = AlgoParams::hedge(&space, 50_000).unwrap();
        let mut learner = Learner::new(params, &space, None).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..50 {
            let probs = learner.strategy_probabilities(&space).unwrap();
            let q = channel_probabilities(&space, &probs);
            let id = sample_index(&probs, &mut rng);
            let mut avg = vec![0.0; 10];
            for &k in space.strategy(id).channels() {
                avg[k] = rng.gen::<f64>() * 0.3;
            }
            let before = learner.weights().to_vec();
            learner.update(&space, id, &avg, &q).unwrap();
            let max_before = before.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            // update scaled by 1/max; undo to compare pre-renormalization.
            for (k, (&b, &a)) in before.iter().zip(learner.weights()).enumerate() {
                let renorm = a * max_before;
                // Only monitored channels move; allow for the division.
                if space.strategy(id).contains(k) {
                    assert!(renorm <= b * max_before * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn update_rejects_unmonitored_rewards_in_debug() {
        let space = space_10_2();
        let params = AlgoParams::hedge(&space, 50_000).unwrap();
        let mut learner = Learner::new(params, &space, None).unwrap();
        let probs = learner.strategy_probabilities(&space).unwrap();
        let q = channel_probabilities(&space, &probs);
        let mut avg = vec![0.0; 10];
        avg[9] = 0.1; // strategy 0 monitors {0, 1}
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            learner.update(&space, 0, &avg, &q)
        }));
        assert!(result.is_err());
    }

    #[test]
    fn cover_variants_require_a_covering_set() {
        let space = space_10_2();
        let params = AlgoParams {
            variant: Variant::CoverReward,
            tau: 3,
            gamma: 0.04,
            eta: 0.002,
            beta: 0.006,
        };
        assert!(matches!(
            Learner::new(params, &space, None),
            Err(AlgoError::MissingCovering(_))
        ));
    }

    #[test]
    fn variant_indices_round_trip() {
        for v in Variant::ALL {
            assert_eq!(Variant::from_index(v.index()), Some(v));
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
            assert_eq!(v.index().to_string().parse::<Variant>().unwrap(), v);
        }
        assert!("5".parse::<Variant>().is_err());
    }

    #[test]
    fn worked_cover_reward_update() {
        // Uniform start, beta=0.1, eta=0.1, gamma=0.2, cover {{0,1},{2,3}},
        // chosen {0,1} with batch averages (0.3, 0). All four monitoring
        // probabilities are 1/2, so the scores are 0.8, 0.2, 0.2, 0.2 and
        // the renormalized weights exp(-0.06) except channel 0.
        let space = StrategySpace::new(4, 2).unwrap();
        let covering = CoveringSet::from_members(
            &space,
            vec![space.id_of(&[0, 1]).unwrap(), space.id_of(&[2, 3]).unwrap()],
        )
        .unwrap();
        let params = AlgoParams {
            variant: Variant::CoverReward,
            tau: 1,
            gamma: 0.2,
            eta: 0.1,
            beta: 0.1,
        };
        let mut learner = Learner::new(params, &space, Some(covering)).unwrap();
        let probs = learner.strategy_probabilities(&space).unwrap();
        let q = channel_probabilities(&space, &probs);
        for &qk in &q {
            assert!((qk - 0.5).abs() < 1e-15);
        }
        let avg = vec![0.3, 0.0, 0.0, 0.0];
        learner.update(&space, 0, &avg, &q).unwrap();
        let w = learner.weights();
        assert!((w[0] - 1.0).abs() < 1e-15);
        let expected = (-0.06f64).exp();
        for &wk in &w[1..] {
            assert!((wk - expected).abs() < 1e-15);
        }
    }
}
