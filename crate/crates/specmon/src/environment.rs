//! The reward environment: attack draws, detection draws, and the
//! counterfactual reward matrix.
//!
//! Every slot the environment realizes one detection draw per attacked
//! channel, whether or not that channel is monitored, and writes the
//! resulting reward into the matrix. Monitoring only gates what the
//! learner observes (and which attackers are captured). Attack draws,
//! detection draws, and learner sampling consume separate RNG streams, so
//! under an oblivious adversary the finished matrix depends on the seed
//! alone, not on the monitor's choices.

use crate::adversary::{AdversaryError, AdversaryModel, AttackOutcome};
use crate::config::SimConfig;
use crate::space::Strategy;
use rand_chacha::ChaCha12Rng;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("slots must be stepped in order, expected {expected}, got {got}")]
    SlotOutOfOrder { expected: usize, got: usize },
    #[error("slot {0} is beyond the horizon")]
    BeyondHorizon(usize),
    #[error("reward matrix requested after {completed} of {horizon} slots")]
    NotFinished { completed: usize, horizon: usize },
    #[error("observation buffer holds {got} entries, monitor has {expected} radios")]
    BadObservationBuffer { expected: usize, got: usize },
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
}

/// Realized per-slot, per-channel rewards: `unit_reward` where an attack
/// was detected, 0 elsewhere. Row `t` is slot `t`, column `k` channel `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardMatrix {
    horizon: usize,
    channels: usize,
    values: Vec<f64>,
}

impl RewardMatrix {
    fn zeros(horizon: usize, channels: usize) -> Self {
        RewardMatrix {
            horizon,
            channels,
            values: vec![0.0; horizon * channels],
        }
    }

    /// Builds a matrix from externally supplied values, row-major by slot.
    /// Panics if the value count is not `horizon * channels`.
    pub fn from_values(horizon: usize, channels: usize, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            horizon * channels,
            "need horizon * channels values"
        );
        RewardMatrix {
            horizon,
            channels,
            values,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn get(&self, slot: usize, channel: usize) -> f64 {
        self.values[slot * self.channels + channel]
    }

    /// Total reward channel `k` would have yielded over the horizon.
    pub fn channel_total(&self, channel: usize) -> f64 {
        (0..self.horizon).map(|t| self.get(t, channel)).sum()
    }
}

/// Simulation state advanced one slot at a time by the episode loop.
pub struct Environment {
    config: SimConfig,
    adversary: AdversaryModel,
    matrix: RewardMatrix,
    next_slot: usize,
    adv_rng: ChaCha12Rng,
    det_rng: ChaCha12Rng,
    outcome: AttackOutcome,
    detected: Vec<bool>,
    captured: Vec<bool>,
}

impl Environment {
    pub fn new(
        cfg: &SimConfig,
        adversary: AdversaryModel,
        adv_rng: ChaCha12Rng,
        det_rng: ChaCha12Rng,
    ) -> Self {
        Environment {
            matrix: RewardMatrix::zeros(cfg.horizon, cfg.channels),
            outcome: AttackOutcome::new(cfg.attackers, cfg.channels),
            detected: vec![false; cfg.channels],
            captured: vec![false; cfg.attackers],
            config: cfg.clone(),
            adversary,
            next_slot: 0,
            adv_rng,
            det_rng,
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn adversary(&self) -> &AdversaryModel {
        &self.adversary
    }

    /// Slots completed so far.
    pub fn completed(&self) -> usize {
        self.next_slot
    }

    /// Advances slot `t`: draws attacks, realizes one detection draw per
    /// attacked channel, records rewards into the matrix, reports captures
    /// back to the adversary, and writes the rewards of the monitored
    /// channels into `observed` (aligned with `monitored.channels()`).
    pub fn step(
        &mut self,
        t: usize,
        monitored: &Strategy,
        observed: &mut [f64],
    ) -> Result<(), EnvError> {
        if t != self.next_slot {
            return Err(EnvError::SlotOutOfOrder {
                expected: self.next_slot,
                got: t,
            });
        }
        if t >= self.config.horizon {
            return Err(EnvError::BeyondHorizon(t));
        }
        if observed.len() != monitored.channels().len() {
            return Err(EnvError::BadObservationBuffer {
                expected: monitored.channels().len(),
                got: observed.len(),
            });
        }

        self.adversary.draw(t, &mut self.adv_rng, &mut self.outcome)?;

        // One detection draw per attacked channel, in channel order, so the
        // stream advances identically regardless of what is monitored.
        self.detected.iter_mut().for_each(|d| *d = false);
        for k in 0..self.config.channels {
            if self.outcome.counts[k] > 0 {
                let u: f64 = self.det_rng.gen();
                if u < self.config.detection_prob {
                    self.detected[k] = true;
                    self.matrix.values[t * self.config.channels + k] = self.config.unit_reward;
                }
            }
        }

        for (m, choice) in self.outcome.channels.iter().enumerate() {
            self.captured[m] = match choice {
                Some(k) => self.detected[*k] && monitored.contains(*k),
                None => false,
            };
        }

        for (slot_value, &k) in observed.iter_mut().zip(monitored.channels()) {
            *slot_value = self.matrix.values[t * self.config.channels + k];
        }

        self.adversary.notify(t, &self.outcome, &self.captured)?;

        self.next_slot += 1;
        Ok(())
    }

    /// The finished counterfactual matrix; available once every slot has
    /// been stepped.
    pub fn into_matrix(self) -> Result<RewardMatrix, EnvError> {
        if self.next_slot != self.config.horizon {
            return Err(EnvError::NotFinished {
                completed: self.next_slot,
                horizon: self.config.horizon,
            });
        }
        Ok(self.matrix)
    }
}
