//! The strategy space: every size-`radios` channel subset, with an
//! incidence index from channels to the strategies containing them.

use crate::config::SimConfig;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("radio count must satisfy 1 <= radios <= channels, got radios={radios}, channels={channels}")]
    RadiosOutOfRange { radios: usize, channels: usize },
    #[error("strategy count C({channels}, {radios}) exceeds the indexable range")]
    TooManyStrategies { channels: usize, radios: usize },
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Number of size-`k` subsets of an `n`-element set, or `None` when the
/// value overflows u128. The accumulator always holds the exact binomial
/// of the prefix, which never exceeds the final value, so `None` means the
/// result itself does not fit.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) is exact; cancel the divisor up front so
        // the multiplication cannot overflow unless the result does.
        let mut factor = (n - i) as u128;
        let mut div = (i + 1) as u128;
        let g = gcd(factor, div);
        factor /= g;
        div /= g;
        let g = gcd(acc, div);
        acc /= g;
        div /= g;
        debug_assert_eq!(div, 1, "division must be exact");
        acc = acc.checked_mul(factor)?;
    }
    Some(acc)
}

/// One assignment of the radios to distinct channels, identified by its
/// rank in the lexicographic enumeration of all size-`radios` subsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    id: usize,
    channels: Vec<usize>,
}

impl Strategy {
    pub fn id(&self) -> usize {
        self.id
    }

    /// Monitored channels, sorted ascending.
    pub fn channels(&self) -> &[usize] {
        &self.channels
    }

    pub fn contains(&self, channel: usize) -> bool {
        self.channels.binary_search(&channel).is_ok()
    }

    /// Number of channels shared with `other`.
    pub fn overlap(&self, other: &Strategy) -> usize {
        let (mut i, mut j, mut shared) = (0, 0, 0);
        while i < self.channels.len() && j < other.channels.len() {
            match self.channels[i].cmp(&other.channels[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    shared += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        shared
    }
}

/// All size-`radios` subsets of the channel set, in lexicographic order,
/// plus the channel-to-strategy incidence index.
#[derive(Debug, Clone)]
pub struct StrategySpace {
    channels: usize,
    radios: usize,
    strategies: Vec<Strategy>,
    incidence: Vec<Vec<usize>>,
}

impl StrategySpace {
    pub fn new(channels: usize, radios: usize) -> Result<Self, SpaceError> {
        if radios < 1 || radios > channels {
            return Err(SpaceError::RadiosOutOfRange { radios, channels });
        }
        let count = binomial(channels as u64, radios as u64)
            .filter(|&c| c <= usize::MAX as u128)
            .ok_or(SpaceError::TooManyStrategies { channels, radios })?
            as usize;

        let mut strategies = Vec::with_capacity(count);
        let mut incidence = vec![Vec::new(); channels];
        let mut current: Vec<usize> = (0..radios).collect();
        loop {
            let id = strategies.len();
            for &k in &current {
                incidence[k].push(id);
            }
            strategies.push(Strategy {
                id,
                channels: current.clone(),
            });

            // Advance to the next combination: bump the rightmost channel
            // that still has room, then reset everything after it.
            let mut i = radios;
            while i > 0 && current[i - 1] == channels - radios + (i - 1) {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            current[i - 1] += 1;
            for j in i..radios {
                current[j] = current[j - 1] + 1;
            }
        }
        debug_assert_eq!(strategies.len(), count);

        Ok(StrategySpace {
            channels,
            radios,
            strategies,
            incidence,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn radios(&self) -> usize {
        self.radios
    }

    /// Number of strategies.
    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    pub fn strategy(&self, id: usize) -> &Strategy {
        &self.strategies[id]
    }

    pub fn strategies(&self) -> &[Strategy] {
        &self.strategies
    }

    /// Ids of the strategies containing `channel`, ascending.
    pub fn incidence(&self, channel: usize) -> &[usize] {
        &self.incidence[channel]
    }

    /// Id of the strategy with exactly these channels (sorted ascending).
    pub fn id_of(&self, channels: &[usize]) -> Option<usize> {
        self.strategies
            .binary_search_by(|s| s.channels.as_slice().cmp(channels))
            .ok()
    }

    /// Cost of retuning from `prev` to `next`: `unit_cost` per channel in
    /// `next` that was not already monitored.
    pub fn switching_cost(&self, prev: &Strategy, next: &Strategy, unit_cost: f64) -> f64 {
        debug_assert_eq!(prev.channels.len(), self.radios);
        debug_assert_eq!(next.channels.len(), self.radios);
        unit_cost * (self.radios - prev.overlap(next)) as f64
    }
}

/// Cost charged in the first slot, when all radios must be tuned.
pub fn first_slot_cost(config: &SimConfig) -> f64 {
    config.unit_switch_cost * config.radios as f64
}
