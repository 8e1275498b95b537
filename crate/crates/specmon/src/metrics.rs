//! Episode traces, hindsight comparison, and trial aggregation.
//!
//! Weak regret compares the learner's utility against the best fixed
//! strategy in hindsight on the same realized reward matrix. Because the
//! strategy space contains every size-`radios` subset, the best fixed
//! strategy is exactly the top-`radios` channels by cumulative reward.

use crate::environment::RewardMatrix;
use crate::space::StrategySpace;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("cannot aggregate zero reports")]
    NoReports,
}

/// Everything one episode produced.
#[derive(Debug, Clone)]
pub struct RunTrace {
    /// Batch length the episode ran with.
    pub tau: usize,
    /// Radios per slot; the stride of `observed`.
    pub radios: usize,
    /// Strategy id chosen in each batch.
    pub chosen: Vec<usize>,
    /// Switching cost charged at each batch boundary (first entry is the
    /// initial tuning cost).
    pub switch_costs: Vec<f64>,
    /// Observed rewards, slot-major: entry `t * radios + i` is what radio
    /// `i` (the i-th channel of that batch's strategy) saw in slot `t`.
    pub observed: Vec<f64>,
    /// First slot with a detection, if any.
    pub first_detection: Option<usize>,
    /// The environment's counterfactual reward matrix.
    pub matrix: RewardMatrix,
}

impl RunTrace {
    pub fn horizon(&self) -> usize {
        self.matrix.horizon()
    }

    /// Total observed reward.
    pub fn reward(&self) -> f64 {
        self.observed.iter().sum()
    }

    /// Total switching cost paid.
    pub fn switching_cost(&self) -> f64 {
        self.switch_costs.iter().sum()
    }

    /// Reward minus switching cost.
    pub fn utility(&self) -> f64 {
        self.reward() - self.switching_cost()
    }

    /// Observed rewards of slot `t`, aligned with the channels of the
    /// strategy that was active in `t`'s batch.
    pub fn slot_observations(&self, t: usize) -> &[f64] {
        &self.observed[t * self.radios..(t + 1) * self.radios]
    }
}

/// Best fixed strategy in hindsight: the top-`radios` channels by
/// cumulative matrix reward, ties broken toward lower channel indices.
/// Returns `(strategy id, total reward, utility)`; the utility charges the
/// strategy its one-time initial tuning cost.
pub fn best_fixed(
    matrix: &RewardMatrix,
    space: &StrategySpace,
    first_slot_cost: f64,
) -> (usize, f64, f64) {
    let mut order: Vec<usize> = (0..space.channels()).collect();
    let totals: Vec<f64> = order.iter().map(|&k| matrix.channel_total(k)).collect();
    order.sort_by(|&a, &b| totals[b].partial_cmp(&totals[a]).unwrap().then(a.cmp(&b)));
    let mut best: Vec<usize> = order[..space.radios()].to_vec();
    best.sort_unstable();
    let id = space
        .id_of(&best)
        .expect("any sorted channel subset of the right size is a strategy");
    // Sum in ascending channel order, matching an exhaustive scan.
    let reward: f64 = best.iter().map(|&k| totals[k]).sum();
    (id, reward, reward - first_slot_cost)
}

/// Outcome of one trial, ready for a results row.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub reward: f64,
    pub switching_cost: f64,
    pub utility: f64,
    pub best_strategy: usize,
    pub best_reward: f64,
    pub best_utility: f64,
    pub weak_regret: f64,
    pub normalized_regret: f64,
    /// 0-based slot of the first detection; printed 1-based.
    pub first_detection: Option<usize>,
}

/// Scores a finished episode against the best fixed strategy in hindsight.
pub fn regret_report(
    trace: &RunTrace,
    space: &StrategySpace,
    first_slot_cost: f64,
) -> RegretReport {
    let reward = trace.reward();
    let switching_cost = trace.switching_cost();
    let utility = reward - switching_cost;
    let (best_strategy, best_reward, best_utility) =
        best_fixed(&trace.matrix, space, first_slot_cost);
    let weak_regret = best_utility - utility;
    RegretReport {
        reward,
        switching_cost,
        utility,
        best_strategy,
        best_reward,
        best_utility,
        weak_regret,
        normalized_regret: weak_regret / trace.horizon() as f64,
        first_detection: trace.first_detection,
    }
}

fn mean_and_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Summary statistics over the trials of one experiment cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub trials: usize,
    pub mean_utility: f64,
    pub std_utility: f64,
    pub mean_weak_regret: f64,
    pub std_weak_regret: f64,
    pub mean_normalized_regret: f64,
    pub std_normalized_regret: f64,
    /// Empirical CDF of the first detection slot (1-based): one point per
    /// distinct slot, fraction of all trials detected by that slot.
    pub detection_cdf: Vec<(usize, f64)>,
    /// Fraction of trials with no detection at all.
    pub never_detected: f64,
}

impl Aggregate {
    /// Smallest 1-based slot by which at least fraction `q` of the trials
    /// had detected, or `None` if the CDF never reaches `q`.
    pub fn detection_quantile(&self, q: f64) -> Option<usize> {
        self.detection_cdf
            .iter()
            .find(|(_, fraction)| *fraction >= q)
            .map(|(slot, _)| *slot)
    }
}

/// Aggregates trial reports: means and sample standard deviations plus the
/// first-detection CDF. Trials that never detect contribute only to
/// `never_detected`, so the CDF tops out below 1 in that case.
pub fn aggregate(reports: &[RegretReport]) -> Result<Aggregate, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::NoReports);
    }
    let n = reports.len();
    let (mean_utility, std_utility) = mean_and_std(reports.iter().map(|r| r.utility));
    let (mean_weak_regret, std_weak_regret) = mean_and_std(reports.iter().map(|r| r.weak_regret));
    let (mean_normalized_regret, std_normalized_regret) =
        mean_and_std(reports.iter().map(|r| r.normalized_regret));

    let mut slots: Vec<usize> = reports
        .iter()
        .filter_map(|r| r.first_detection)
        .map(|t| t + 1)
        .collect();
    slots.sort_unstable();
    let mut detection_cdf = Vec::new();
    let mut seen = 0usize;
    let mut i = 0;
    while i < slots.len() {
        let slot = slots[i];
        while i < slots.len() && slots[i] == slot {
            seen += 1;
            i += 1;
        }
        detection_cdf.push((slot, seen as f64 / n as f64));
    }
    let never_detected = (n - slots.len()) as f64 / n as f64;

    Ok(Aggregate {
        trials: n,
        mean_utility,
        std_utility,
        mean_weak_regret,
        std_weak_regret,
        mean_normalized_regret,
        std_normalized_regret,
        detection_cdf,
        never_detected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{AdversaryKind, AdversaryModel};
    use crate::config::SimConfig;
    use crate::environment::Environment;
    use crate::space::StrategySpace;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// Builds a matrix by running a real environment; returns it.
    fn sample_matrix(cfg: &SimConfig, seed: u64) -> RewardMatrix {
        let space = StrategySpace::new(cfg.channels, cfg.radios).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let adversary = AdversaryModel::init(AdversaryKind::Uniform, cfg, &mut rng).unwrap();
        let mut adv_rng = ChaCha12Rng::seed_from_u64(seed);
        adv_rng.set_stream(1);
        let mut det_rng = ChaCha12Rng::seed_from_u64(seed);
        det_rng.set_stream(2);
        let mut env = Environment::new(cfg, adversary, adv_rng, det_rng);
        let mut obs = vec![0.0; cfg.radios];
        for t in 0..cfg.horizon {
            env.step(t, space.strategy(0), &mut obs).unwrap();
        }
        env.into_matrix().unwrap()
    }

    #[test]
    fn best_fixed_picks_the_top_channels_with_low_index_ties() {
        let cfg = SimConfig {
            horizon: 300,
            ..SimConfig::default()
        };
        let space = StrategySpace::new(10, 2).unwrap();
        let matrix = sample_matrix(&cfg, 5);
        let (id, reward, utility) = best_fixed(&matrix, &space, 0.06);

        // Exhaustive check over all strategies, first maximizer wins
        // (lexicographically smallest, hence the lowest-index tie-break).
        let mut exhaustive_id = 0;
        let mut exhaustive_reward = f64::NEG_INFINITY;
        for s in space.strategies() {
            let total: f64 = s.channels().iter().map(|&k| matrix.channel_total(k)).sum();
            if total > exhaustive_reward {
                exhaustive_reward = total;
                exhaustive_id = s.id();
            }
        }
        assert_eq!(id, exhaustive_id);
        assert_eq!(reward, exhaustive_reward);
        assert_eq!(utility, reward - 0.06);
    }

    #[test]
    fn aggregate_of_a_single_report_has_zero_std() {
        let report = RegretReport {
            reward: 10.0,
            switching_cost: 1.0,
            utility: 9.0,
            best_strategy: 0,
            best_reward: 12.0,
            best_utility: 11.0,
            weak_regret: 2.0,
            normalized_regret: 0.02,
            first_detection: Some(4),
        };
        let agg = aggregate(&[report]).unwrap();
        assert_eq!(agg.trials, 1);
        assert_eq!(agg.mean_weak_regret, 2.0);
        assert_eq!(agg.std_weak_regret, 0.0);
        assert_eq!(agg.detection_cdf, vec![(5, 1.0)]);
        assert_eq!(agg.never_detected, 0.0);
    }

    #[test]
    fn detection_cdf_collapses_duplicate_slots() {
        let base = RegretReport {
            reward: 0.0,
            switching_cost: 0.0,
            utility: 0.0,
            best_strategy: 0,
            best_reward: 0.0,
            best_utility: 0.0,
            weak_regret: 0.0,
            normalized_regret: 0.0,
            first_detection: None,
        };
        let reports: Vec<RegretReport> = [Some(0), Some(0), Some(2), Some(6)]
            .into_iter()
            .map(|fd| RegretReport {
                first_detection: fd,
                ..base.clone()
            })
            .collect();
        let agg = aggregate(&reports).unwrap();
        assert_eq!(agg.detection_cdf, vec![(1, 0.5), (3, 0.75), (7, 1.0)]);
        assert_eq!(agg.never_detected, 0.0);
        assert_eq!(agg.detection_quantile(0.5), Some(1));
        assert_eq!(agg.detection_quantile(0.6), Some(3));
        assert_eq!(agg.detection_quantile(1.0), Some(7));
    }

    #[test]
    fn never_detected_trials_cap_the_cdf() {
        let base = RegretReport {
            reward: 0.0,
            switching_cost: 0.0,
            utility: 0.0,
            best_strategy: 0,
            best_reward: 0.0,
            best_utility: 0.0,
            weak_regret: 0.0,
            normalized_regret: 0.0,
            first_detection: None,
        };
        let reports: Vec<RegretReport> = [Some(1), None, None, None]
            .into_iter()
            .map(|fd| RegretReport {
                first_detection: fd,
                ..base.clone()
            })
            .collect();
        let agg = aggregate(&reports).unwrap();
        assert_eq!(agg.detection_cdf, vec![(2, 0.25)]);
        assert_eq!(agg.never_detected, 0.75);
        assert_eq!(agg.detection_quantile(0.5), None);
    }

    #[test]
    fn aggregate_rejects_empty_input() {
        assert!(matches!(aggregate(&[]), Err(MetricsError::NoReports)));
    }
}
