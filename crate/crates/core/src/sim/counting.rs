//! Coincidence counting on time-tag streams.

use crate::error::{Error, Result};
use crate::sim::schedule::PulseSchedule;

fn check_sorted(tags: &[i64]) -> Result<()> {
    if tags.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Unsorted);
    }
    Ok(())
}

/// Number of pairs `(a, b)` with `|a - (b + shift)| <= half`.
fn count_pairs(a: &[i64], b: &[i64], half: i64, shift: i64) -> u64 {
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut total = 0u64;
    for &t in a {
        while lo < b.len() && b[lo] + shift < t - half {
            lo += 1;
        }
        if hi < lo {
            hi = lo;
        }
        while hi < b.len() && b[hi] + shift <= t + half {
            hi += 1;
        }
        total += (hi - lo) as u64;
    }
    total
}

/// Coincidences (`|tA - tB| <= window/2`) and accidentals, the same count
/// with stream B delayed by `offset_ps`. Both streams must be sorted.
pub fn coincidence_count(records_a: &[i64], records_b: &[i64], window_ps: i64, offset_ps: i64) -> Result<(u64, u64)> {
    check_sorted(records_a)?;
    check_sorted(records_b)?;
    if window_ps < 0 {
        return Err(Error::OutOfRange {
            name: "window_ps",
            value: window_ps as f64,
        });
    }
    let half = window_ps / 2;
    Ok((
        count_pairs(records_a, records_b, half, 0),
        count_pairs(records_a, records_b, half, offset_ps),
    ))
}

/// A gate repeated every pump period: tags within `[-width/2, width/2)`
/// of `pulse_time(k) + center_ps` for some `k`.
#[derive(Debug, Clone, Copy)]
pub struct PeriodicGate {
    pub schedule: PulseSchedule,
    pub center_ps: i64,
    pub width_ps: i64,
}

impl PeriodicGate {
    /// Pulse index whose gate contains `t`, if any.
    pub fn pulse_of(&self, t: i64) -> Option<u64> {
        let half_period = (self.schedule.period_ps() / 2.0) as i64;
        let (k, r) = self.schedule.locate(t - self.center_ps, half_period)?;
        let half = self.width_ps / 2;
        (r >= -half && r < self.width_ps - half).then_some(k)
    }

    /// Tags inside the gate, order preserved.
    pub fn filter(&self, tags: &[i64]) -> Vec<i64> {
        tags.iter().copied().filter(|&t| self.pulse_of(t).is_some()).collect()
    }

    /// Sorted, deduplicated pulse indices with at least one tag in the gate.
    pub fn occupied_pulses(&self, tags: &[i64]) -> Vec<u64> {
        let mut ks: Vec<u64> = tags.iter().filter_map(|&t| self.pulse_of(t)).collect();
        ks.sort_unstable();
        ks.dedup();
        ks
    }
}

/// Number of values present in every sorted list.
pub fn intersection_count(lists: &[Vec<u64>]) -> u64 {
    let Some((first, rest)) = lists.split_first() else {
        return 0;
    };
    let mut idx = vec![0usize; rest.len()];
    let mut n = 0;
    'outer: for &k in first {
        for (list, i) in rest.iter().zip(idx.iter_mut()) {
            while *i < list.len() && list[*i] < k {
                *i += 1;
            }
            if *i == list.len() {
                break 'outer;
            }
            if list[*i] != k {
                continue 'outer;
            }
        }
        n += 1;
    }
    n
}
