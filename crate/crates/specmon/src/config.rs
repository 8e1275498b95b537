//! Scenario configuration shared by every component of a simulation run.

use thiserror::Error;

/// Violations of the configuration invariants, one variant per invariant.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("channel count must be at least 1, got {0}")]
    ChannelCount(usize),
    #[error("radio count must satisfy 1 <= radios <= channels, got radios={radios}, channels={channels}")]
    RadioCount { radios: usize, channels: usize },
    #[error("unit reward must lie in (0, 1], got {0}")]
    UnitReward(f64),
    #[error("reward scale requires unit_reward * radios <= 1, got {0}")]
    RewardScale(f64),
    #[error("unit switching cost must be finite and non-negative, got {0}")]
    SwitchCost(f64),
    #[error("detection probability must lie in [0, 1], got {0}")]
    DetectionProb(f64),
    #[error("horizon must be at least 1")]
    Horizon,
    #[error("confidence level delta must lie in (0, 1), got {0}")]
    Delta(f64),
    #[error("trial count must be at least 1")]
    Trials,
}

/// Parameters of one simulated scenario.
///
/// Rewards are scaled so a full strategy of `radios` channels collects at
/// most 1 per slot, hence `unit_reward * radios <= 1`. Channel indices are
/// 0-based everywhere inside the library; reports print them 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Number of channels (CLI flag `--K`).
    pub channels: usize,
    /// Number of monitor radios, i.e. channels watched per slot (`--l`).
    pub radios: usize,
    /// Reward collected per detected misuse per slot (`--r`).
    pub unit_reward: f64,
    /// Cost of retuning a single radio between batches (`--cost`).
    pub unit_switch_cost: f64,
    /// Probability that a monitored misuse is actually detected (`--pd`).
    pub detection_prob: f64,
    /// Number of slots (`--T`).
    pub horizon: usize,
    /// Number of misusing transmitters (`--mus`).
    pub attackers: usize,
    /// Confidence level for the high-probability schedules (`--delta`).
    pub delta: f64,
    /// Master seed; all per-trial randomness derives from it (`--seed`).
    pub seed: u64,
    /// Trials per experiment cell (`--trials`).
    pub trials: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            channels: 10,
            radios: 2,
            unit_reward: 0.3,
            unit_switch_cost: 0.03,
            detection_prob: 0.9,
            horizon: 50_000,
            attackers: 2,
            delta: 0.5,
            seed: 42,
            trials: 100,
        }
    }
}

impl SimConfig {
    /// Checks every invariant, reporting the first violation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.channels < 1 {
            return Err(ConfigError::ChannelCount(self.channels));
        }
        if self.radios < 1 || self.radios > self.channels {
            return Err(ConfigError::RadioCount {
                radios: self.radios,
                channels: self.channels,
            });
        }
        if !(self.unit_reward > 0.0 && self.unit_reward <= 1.0) {
            return Err(ConfigError::UnitReward(self.unit_reward));
        }
        // Tolerance absorbs decimal artifacts such as 0.1 * 10 > 1.
        let scale = self.unit_reward * self.radios as f64;
        if scale > 1.0 + 1e-9 {
            return Err(ConfigError::RewardScale(scale));
        }
        if !(self.unit_switch_cost >= 0.0 && self.unit_switch_cost.is_finite()) {
            return Err(ConfigError::SwitchCost(self.unit_switch_cost));
        }
        if !(self.detection_prob >= 0.0 && self.detection_prob <= 1.0) {
            return Err(ConfigError::DetectionProb(self.detection_prob));
        }
        if self.horizon < 1 {
            return Err(ConfigError::Horizon);
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ConfigError::Delta(self.delta));
        }
        if self.trials < 1 {
            return Err(ConfigError::Trials);
        }
        Ok(())
    }
}
