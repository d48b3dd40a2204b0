//! Pair emission per pulse and channel pair.

use crate::config::{ExperimentConfig, PairStatistics};
use crate::rng::StreamRng;

/// Probability of exactly `n` pairs in one pulse.
pub fn pair_number_pmf(stats: PairStatistics, mu: f64, n: u32) -> f64 {
    if mu <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    match stats {
        PairStatistics::Thermal => {
            let q = mu / (1.0 + mu);
            (1.0 - q) * q.powi(n as i32)
        }
        PairStatistics::Poisson => {
            let ln = n as f64 * mu.ln() - mu - ln_factorial(n);
            ln.exp()
        }
        PairStatistics::Single => match n {
            0 => 1.0 - mu,
            1 => mu,
            _ => 0.0,
        },
    }
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Draws a pair number by inversion.
pub fn sample_pair_count(stats: PairStatistics, mu: f64, rng: &mut StreamRng) -> u32 {
    if mu <= 0.0 {
        return 0;
    }
    match stats {
        PairStatistics::Thermal => rng.geometric(1.0 / (1.0 + mu)).min(u32::MAX as u64) as u32,
        PairStatistics::Poisson => rng.poisson(mu).min(u32::MAX as u64) as u32,
        PairStatistics::Single => rng.bernoulli(mu) as u32,
    }
}

/// One pump sub-pulse: period index and 0-based slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pulse {
    pub index: u64,
    pub slot: usize,
}

/// One photon pair produced by a pump sub-pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairEmission {
    pub pulse: Pulse,
    pub channel_pair: usize,
    /// Only the first pair of a pulse carries the entangled phase; the
    /// others are treated as phase-randomized.
    pub coherent: bool,
}

/// Pairs emitted into `channel_pair` by one sub-pulse.
pub fn emit_pairs(pulse: Pulse, channel_pair: usize, cfg: &ExperimentConfig, rng: &mut StreamRng) -> Vec<PairEmission> {
    let n = sample_pair_count(cfg.pair_statistics, cfg.mu, rng);
    (0..n)
        .map(|k| PairEmission {
            pulse,
            channel_pair,
            coherent: k == 0,
        })
        .collect()
}

/// Samples only the pairs that can possibly be detected.
///
/// Each pair is independently "kept" with probability `keep`, the chance
/// that at least one of its photons survives the most transparent path.
/// Pulses without kept pairs are skipped geometrically, and the loss stage
/// later accepts kept photons with the ratio of the actual to the maximal
/// transmittance, so the end result has the same law as simulating every
/// pulse.
#[derive(Debug, Clone)]
pub(crate) struct KeptPairSampler {
    keep: f64,
    p_any: f64,
    /// Cumulative law of the pair number given at least one kept pair,
    /// indexed from n = 1.
    cdf: Vec<f64>,
}

impl KeptPairSampler {
    pub(crate) fn new(stats: PairStatistics, mu: f64, keep: f64) -> Self {
        let mut weights = Vec::new();
        if mu > 0.0 && keep > 0.0 {
            let mut n = 1u32;
            loop {
                let p = pair_number_pmf(stats, mu, n);
                // stop once past the mode and the terms are negligible
                if (n as f64) > mu + 1.0 && p < 1e-18 {
                    break;
                }
                weights.push(p * (1.0 - (1.0 - keep).powi(n as i32)));
                n += 1;
            }
        }
        let p_any: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|w| {
                acc += w / p_any;
                acc
            })
            .collect();
        KeptPairSampler { keep, p_any, cdf }
    }

    /// Probability that a pulse contains at least one kept pair.
    pub(crate) fn p_any(&self) -> f64 {
        self.p_any
    }

    /// Pulses to skip before the next pulse with a kept pair.
    pub(crate) fn gap(&self, rng: &mut StreamRng) -> u64 {
        rng.geometric(self.p_any)
    }

    /// Fills `out` with one flag per kept pair: whether it is the
    /// pulse's first (coherent) pair.
    pub(crate) fn sample(&self, rng: &mut StreamRng, out: &mut Vec<bool>) {
        out.clear();
        let u = rng.uniform();
        let n = self.cdf.partition_point(|&c| c < u).min(self.cdf.len() - 1) as u32 + 1;
        let s = self.keep;
        // index of the first kept pair, truncated geometric on 0..n
        let first = if s >= 1.0 {
            0
        } else {
            let reach = 1.0 - (1.0 - s).powi(n as i32);
            let v = rng.uniform() * reach;
            (((-v).ln_1p() / (-s).ln_1p()).floor() as u32).min(n - 1)
        };
        out.push(first == 0);
        for _ in first + 1..n {
            if rng.bernoulli(s) {
                out.push(false);
            }
        }
    }
}
