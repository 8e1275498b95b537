//! Attacker models: where the misusing transmitters strike each slot.
//!
//! The three oblivious kinds draw from a fixed per-attacker distribution,
//! so with a fixed seed their slot-by-slot choices do not depend on the
//! monitor at all. The adaptive kind runs one bandit learner per attacker
//! over the single channels: an attacker earns the unit reward whenever it
//! transmits uncaptured, observes only whether it was captured, and shifts
//! its weight away from channels where captures happen.

use crate::algo::{channel_probabilities, sample_index, AlgoError, AlgoParams, Learner, Variant};
use crate::config::SimConfig;
use crate::space::StrategySpace;
use rand::Rng;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("attack probabilities must be finite and lie in [0, 1], got {0}")]
    BadProbability(f64),
    #[error("attack probabilities must sum to at most 1, got {0}")]
    BadTotal(f64),
    #[error("attack distribution must cover at least one channel")]
    Empty,
    #[error(transparent)]
    Learner(#[from] AlgoError),
}

/// The four attacker behaviors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdversaryKind {
    /// Each attacker picks one uniform channel at start and keeps it.
    Fixed,
    /// Each attacker picks a fresh uniform channel every slot.
    Uniform,
    /// Each attacker draws every slot from a bell-shaped distribution
    /// centered on the middle channel.
    Normal,
    /// Each attacker runs its own single-channel bandit learner fed by
    /// capture feedback.
    Adaptive,
}

impl AdversaryKind {
    pub const ALL: [AdversaryKind; 4] = [
        AdversaryKind::Fixed,
        AdversaryKind::Uniform,
        AdversaryKind::Normal,
        AdversaryKind::Adaptive,
    ];

    /// Whether per-slot draws are independent of the monitor's actions.
    pub fn is_oblivious(self) -> bool {
        !matches!(self, AdversaryKind::Adaptive)
    }
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            AdversaryKind::Fixed => "fixed",
            AdversaryKind::Uniform => "uniform",
            AdversaryKind::Normal => "normal",
            AdversaryKind::Adaptive => "adaptive",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for AdversaryKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(AdversaryKind::Fixed),
            "uniform" => Ok(AdversaryKind::Uniform),
            "normal" => Ok(AdversaryKind::Normal),
            "adaptive" => Ok(AdversaryKind::Adaptive),
            other => Err(format!(
                "unknown adversary '{other}', expected fixed, uniform, normal or adaptive"
            )),
        }
    }
}

/// Per-channel attack probabilities for one attacker. The entries may sum
/// to less than 1; the residual mass means "do not attack this slot".
#[derive(Debug, Clone, PartialEq)]
pub struct AttackDistribution {
    probs: Vec<f64>,
}

impl AttackDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, AdversaryError> {
        if probs.is_empty() {
            return Err(AdversaryError::Empty);
        }
        let mut total = 0.0;
        for &p in &probs {
            if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                return Err(AdversaryError::BadProbability(p));
            }
            total += p;
        }
        if total > 1.0 + 1e-12 {
            return Err(AdversaryError::BadTotal(total));
        }
        Ok(AttackDistribution { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Inverse-CDF draw; `None` is the no-attack outcome carried by any
    /// probability mass not assigned to a channel.
    pub fn sample(&self, rng: &mut impl Rng) -> Option<usize> {
        let u: f64 = rng.gen();
        let mut cumulative = 0.0;
        for (k, &p) in self.probs.iter().enumerate() {
            cumulative += p;
            if u < cumulative {
                return Some(k);
            }
        }
        None
    }
}

/// Bell-shaped attack distribution: the density of a Gaussian centered on
/// the middle of the band (mean `(K-1)/2`, deviation `K/4`) evaluated at
/// the channel indices and renormalized to sum to 1.
pub fn normal_attack_distribution(channels: usize) -> AttackDistribution {
    let mean = (channels as f64 - 1.0) / 2.0;
    let sigma = channels as f64 / 4.0;
    let mut probs: Vec<f64> = (0..channels)
        .map(|k| {
            let z = (k as f64 - mean) / sigma;
            (-0.5 * z * z).exp()
        })
        .collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    AttackDistribution::new(probs).expect("normalized density is a valid distribution")
}

/// Attack choices for one slot.
#[derive(Debug, Clone, Default)]
pub struct AttackOutcome {
    /// Channel attacked by each attacker, `None` when it stays silent.
    pub channels: Vec<Option<usize>>,
    /// Number of attackers on each channel.
    pub counts: Vec<u32>,
}

impl AttackOutcome {
    pub fn new(attackers: usize, channels: usize) -> Self {
        AttackOutcome {
            channels: vec![None; attackers],
            counts: vec![0; channels],
        }
    }
}

/// One attacker of the adaptive kind: a bandit learner over the single
/// channels that holds each pick for a batch of its own schedule.
#[derive(Debug, Clone)]
struct AdaptiveAttacker {
    learner: Learner,
    tau: usize,
    horizon: usize,
    arm: usize,
    batch_start: usize,
    reward_sum: f64,
    arm_probs: Vec<f64>,
}

impl AdaptiveAttacker {
    fn new(params: AlgoParams, arms: &StrategySpace, horizon: usize) -> Result<Self, AlgoError> {
        Ok(AdaptiveAttacker {
            tau: params.tau,
            horizon,
            learner: Learner::new(params, arms, None)?,
            arm: 0,
            batch_start: 0,
            reward_sum: 0.0,
            arm_probs: Vec::new(),
        })
    }

    /// Channel attacked at slot `t`; re-samples at its batch boundaries.
    fn draw(
        &mut self,
        t: usize,
        arms: &StrategySpace,
        rng: &mut impl Rng,
    ) -> Result<usize, AlgoError> {
        if t % self.tau == 0 {
            self.arm_probs = self.learner.strategy_probabilities(arms)?;
            self.arm = sample_index(&self.arm_probs, rng);
            self.batch_start = t;
            self.reward_sum = 0.0;
        }
        Ok(self.arm)
    }

    /// Feeds back the slot's reward (unit reward if uncaptured, else 0)
    /// and updates the learner when its batch completes.
    fn notify(&mut self, t: usize, arms: &StrategySpace, reward: f64) -> Result<(), AlgoError> {
        self.reward_sum += reward;
        let end = (self.batch_start + self.tau).min(self.horizon);
        if t + 1 == end {
            let mut avg = vec![0.0; arms.channels()];
            avg[self.arm] = self.reward_sum / (end - self.batch_start) as f64;
            let q = channel_probabilities(arms, &self.arm_probs);
            // With one channel per strategy, the strategy id is the channel.
            self.learner.update(arms, self.arm, &avg, &q)?;
        }
        Ok(())
    }
}

enum ModelState {
    Fixed {
        homes: Vec<usize>,
        channels: usize,
    },
    Uniform {
        attackers: usize,
        channels: usize,
    },
    Normal {
        dist: AttackDistribution,
        attackers: usize,
    },
    Adaptive {
        attackers: Vec<AdaptiveAttacker>,
        arms: StrategySpace,
        unit_reward: f64,
    },
}

/// State of all attackers for one episode.
pub struct AdversaryModel {
    state: ModelState,
}

impl AdversaryModel {
    /// Sets up the attackers. `rng` is consumed only by initialization
    /// draws (the fixed kind's home channels).
    pub fn init(
        kind: AdversaryKind,
        cfg: &SimConfig,
        rng: &mut impl Rng,
    ) -> Result<Self, AdversaryError> {
        let k = cfg.channels;
        let m = cfg.attackers;
        let state = match kind {
            AdversaryKind::Fixed => ModelState::Fixed {
                homes: (0..m).map(|_| rng.gen_range(0..k)).collect(),
                channels: k,
            },
            AdversaryKind::Uniform => ModelState::Uniform {
                attackers: m,
                channels: k,
            },
            AdversaryKind::Normal => ModelState::Normal {
                dist: normal_attack_distribution(k),
                attackers: m,
            },
            AdversaryKind::Adaptive => {
                let arms = StrategySpace::new(k, 1).expect("one radio is always valid");
                let params = adaptive_attacker_params(&arms, cfg.horizon);
                let mut attackers = Vec::with_capacity(m);
                for _ in 0..m {
                    attackers.push(AdaptiveAttacker::new(params.clone(), &arms, cfg.horizon)?);
                }
                ModelState::Adaptive {
                    attackers,
                    arms,
                    unit_reward: cfg.unit_reward,
                }
            }
        };
        Ok(AdversaryModel { state })
    }

    pub fn kind(&self) -> AdversaryKind {
        match &self.state {
            ModelState::Fixed { .. } => AdversaryKind::Fixed,
            ModelState::Uniform { .. } => AdversaryKind::Uniform,
            ModelState::Normal { .. } => AdversaryKind::Normal,
            ModelState::Adaptive { .. } => AdversaryKind::Adaptive,
        }
    }

    /// Slot-invariant attack distribution of one attacker; `None` for the
    /// adaptive kind, whose behavior depends on the interaction.
    pub fn attack_distribution(&self, attacker: usize) -> Option<AttackDistribution> {
        match &self.state {
            ModelState::Fixed { homes, channels } => {
                let mut probs = vec![0.0; *channels];
                probs[homes[attacker]] = 1.0;
                Some(AttackDistribution { probs })
            }
            ModelState::Uniform { channels, .. } => Some(AttackDistribution {
                probs: vec![1.0 / *channels as f64; *channels],
            }),
            ModelState::Normal { dist, .. } => Some(dist.clone()),
            ModelState::Adaptive { .. } => None,
        }
    }

    /// Draws every attacker's channel for slot `t` into `out`.
    pub fn draw(
        &mut self,
        t: usize,
        rng: &mut impl Rng,
        out: &mut AttackOutcome,
    ) -> Result<(), AdversaryError> {
        out.counts.iter_mut().for_each(|c| *c = 0);
        match &mut self.state {
            ModelState::Fixed { homes, .. } => {
                for (m, &home) in homes.iter().enumerate() {
                    out.channels[m] = Some(home);
                }
            }
            ModelState::Uniform {
                attackers,
                channels,
            } => {
                for m in 0..*attackers {
                    out.channels[m] = Some(rng.gen_range(0..*channels));
                }
            }
            ModelState::Normal { dist, attackers } => {
                for m in 0..*attackers {
                    out.channels[m] = dist.sample(rng);
                }
            }
            ModelState::Adaptive {
                attackers, arms, ..
            } => {
                for (m, attacker) in attackers.iter_mut().enumerate() {
                    out.channels[m] = Some(attacker.draw(t, arms, rng)?);
                }
            }
        }
        for &choice in &out.channels {
            if let Some(k) = choice {
                out.counts[k] += 1;
            }
        }
        Ok(())
    }

    /// Reports each attacker's capture outcome for slot `t`. Only the
    /// adaptive kind reacts: an attacker that transmitted earns the unit
    /// reward unless captured.
    pub fn notify(
        &mut self,
        t: usize,
        outcome: &AttackOutcome,
        captured: &[bool],
    ) -> Result<(), AdversaryError> {
        if let ModelState::Adaptive {
            attackers,
            arms,
            unit_reward,
        } = &mut self.state
        {
            for (m, attacker) in attackers.iter_mut().enumerate() {
                if outcome.channels[m].is_some() {
                    let reward = if captured[m] { 0.0 } else { *unit_reward };
                    attacker.notify(t, arms, reward)?;
                }
            }
        }
        Ok(())
    }

    /// Current per-channel pick probabilities of one adaptive attacker's
    /// learner; `None` for the oblivious kinds. Exposed for inspection.
    pub fn adaptive_arm_probabilities(&self, attacker: usize) -> Option<Vec<f64>> {
        match &self.state {
            ModelState::Adaptive {
                attackers, arms, ..
            } => attackers[attacker]
                .learner
                .strategy_probabilities(arms)
                .ok(),
            _ => None,
        }
    }
}

/// Schedule for the adaptive attackers' embedded learners: the uniform-mix
/// schedule over the single channels. Below that schedule's minimum
/// horizon the closed form would leave the exploration rate above 1, so a
/// plain fallback (gamma 1/2, cube-root batch length) is used instead.
fn adaptive_attacker_params(arms: &StrategySpace, horizon: usize) -> AlgoParams {
    AlgoParams::mix_uniform(arms, horizon).unwrap_or(AlgoParams {
        variant: Variant::MixUniform,
        tau: {
            let cube = (horizon as f64).cbrt().round();
            (cube as usize).clamp(1, horizon)
        },
        gamma: 0.5,
        eta: 0.0,
        beta: 0.0,
    })
}
