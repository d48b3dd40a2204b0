//! Pump pulse timing and the time-slot switch.

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Pulse comb: pump period split into `n_slots` equally spaced sub-pulses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSchedule {
    period_ps: f64,
    slot_spacing_ps: i64,
    n_slots: usize,
}

impl PulseSchedule {
    pub fn new(period_ps: f64, slot_spacing_ps: i64, n_slots: usize) -> Result<Self> {
        if !(period_ps > 0.0) || slot_spacing_ps <= 0 || n_slots == 0 {
            return Err(Error::InvalidConfig("bad pulse schedule".into()));
        }
        if (n_slots as i64 * slot_spacing_ps) as f64 >= period_ps {
            return Err(Error::InvalidConfig(format!(
                "{n_slots} slots spaced {slot_spacing_ps} ps do not fit in a {period_ps:.1} ps period"
            )));
        }
        Ok(PulseSchedule {
            period_ps,
            slot_spacing_ps,
            n_slots,
        })
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Self::new(cfg.pulse_period_ps(), cfg.slot_spacing_ps(), cfg.n_slots)
    }

    pub fn period_ps(&self) -> f64 {
        self.period_ps
    }

    /// Period rounded to the picosecond grid.
    pub fn period_ps_rounded(&self) -> i64 {
        self.period_ps.round_ties_even() as i64
    }

    pub fn slot_spacing_ps(&self) -> i64 {
        self.slot_spacing_ps
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    /// Start of pump period `k`, on the integer picosecond grid.
    #[inline]
    pub fn pulse_time(&self, k: u64) -> i64 {
        (k as f64 * self.period_ps).round_ties_even() as i64
    }

    /// Time of sub-pulse `slot` (0-based) in period `k`.
    #[inline]
    pub fn slot_time(&self, k: u64, slot: usize) -> i64 {
        self.pulse_time(k) + slot as i64 * self.slot_spacing_ps
    }

    /// Period whose start lies at or before `t + lead`, and the offset of
    /// `t` from that start. Negative offsets down to `-lead` are possible.
    pub fn locate(&self, t: i64, lead: i64) -> Option<(u64, i64)> {
        let shifted = t + lead;
        if shifted < 0 {
            return None;
        }
        let mut k = (shifted as f64 / self.period_ps).floor() as u64;
        // fix up float rounding at period boundaries
        while k > 0 && self.pulse_time(k) > shifted {
            k -= 1;
        }
        while self.pulse_time(k + 1) <= shifted {
            k += 1;
        }
        Some((k, t - self.pulse_time(k)))
    }
}

/// Sub-pulse times for the first `n_periods` periods as
/// `(time_ps, slot)` with 1-based slot numbers.
pub fn generate_pulse_schedule(cfg: &ExperimentConfig, n_periods: u64) -> Result<Vec<(i64, usize)>> {
    let sched = PulseSchedule::from_config(cfg)?;
    let mut out = Vec::with_capacity(n_periods as usize * sched.n_slots);
    for k in 0..n_periods {
        for j in 0..sched.n_slots {
            out.push((sched.slot_time(k, j), j + 1));
        }
    }
    Ok(out)
}

/// Gate windows of the time-slot switch, one per output port.
///
/// Window `j` spans `[j * spacing - guard, (j + 1) * spacing - guard)`
/// relative to each period start plus the electronic delay. Ports are
/// 0-based here; output path `T{j+1}` is port `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchSchedule {
    pulses: PulseSchedule,
    windows: Vec<(i64, i64)>,
    delay_ps: i64,
    guard_ps: i64,
    leak_probability: f64,
}

impl SwitchSchedule {
    pub fn new(pulses: PulseSchedule, guard_ps: i64, delay_ps: i64, extinction_db: f64) -> Result<Self> {
        let sp = pulses.slot_spacing_ps;
        if guard_ps < 0 || guard_ps >= sp {
            return Err(Error::InvalidConfig("switch guard must be shorter than the slot spacing".into()));
        }
        if !(extinction_db >= 0.0) {
            return Err(Error::OutOfRange {
                name: "switch_extinction_db",
                value: extinction_db,
            });
        }
        let windows = (0..pulses.n_slots)
            .map(|j| (j as i64 * sp - guard_ps, (j as i64 + 1) * sp - guard_ps))
            .collect();
        let leak_probability = if pulses.n_slots > 1 {
            10f64.powf(-extinction_db / 10.0)
        } else {
            0.0
        };
        Ok(SwitchSchedule {
            pulses,
            windows,
            delay_ps,
            guard_ps,
            leak_probability,
        })
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Self::new(
            PulseSchedule::from_config(cfg)?,
            cfg.switch_guard_ps,
            cfg.switch_delay_ps,
            cfg.switch_extinction_db,
        )
    }

    pub fn windows(&self) -> &[(i64, i64)] {
        &self.windows
    }

    pub fn n_ports(&self) -> usize {
        self.windows.len()
    }

    /// Probability that an event leaves by a port adjacent to its scheduled one.
    pub fn leak_probability(&self) -> f64 {
        self.leak_probability
    }

    /// Scheduled port for a tag, ignoring crosstalk.
    pub fn scheduled_port(&self, time_tag_ps: i64) -> Result<usize> {
        let (_, offset) = self
            .pulses
            .locate(time_tag_ps - self.delay_ps, self.guard_ps)
            .ok_or(Error::Unrouted(time_tag_ps))?;
        self.windows
            .iter()
            .position(|&(open, close)| offset >= open && offset < close)
            .ok_or(Error::Unrouted(time_tag_ps))
    }

    /// Applies crosstalk to a scheduled port: with the leak probability the
    /// event moves to a neighbouring port, chosen uniformly.
    pub fn leak(&self, port: usize, rng: &mut StreamRng) -> usize {
        if self.leak_probability <= 0.0 || !rng.bernoulli(self.leak_probability) {
            return port;
        }
        let n = self.n_ports();
        match (port > 0, port + 1 < n) {
            (true, true) => {
                if rng.bernoulli(0.5) {
                    port - 1
                } else {
                    port + 1
                }
            }
            (true, false) => port - 1,
            (false, true) => port + 1,
            (false, false) => port,
        }
    }
}

/// Routes an event by its time tag; see [`SwitchSchedule::leak`] for crosstalk.
pub fn route_time_slot(time_tag_ps: i64, schedule: &SwitchSchedule, rng: &mut StreamRng) -> Result<usize> {
    let port = schedule.scheduled_port(time_tag_ps)?;
    Ok(schedule.leak(port, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stage;

    #[test]
    fn default_schedule() {
        let cfg = ExperimentConfig::default();
        let s = generate_pulse_schedule(&cfg, 2).unwrap();
        assert_eq!(&s[..3], &[(0, 1), (10_000, 2), (20_000, 3)]);
        let sched = PulseSchedule::from_config(&cfg).unwrap();
        assert!((sched.pulse_time(1) - 35_753).abs() <= 1);
        assert_eq!(s[3].0, sched.pulse_time(1));
    }

    #[test]
    fn single_slot_comb() {
        let mut cfg = ExperimentConfig::default();
        cfg.n_slots = 1;
        let s = generate_pulse_schedule(&cfg, 3).unwrap();
        assert_eq!(s.iter().map(|x| x.1).collect::<Vec<_>>(), vec![1, 1, 1]);
        assert!((s[2].0 - 2 * 35_753).abs() <= 1);
    }

    #[test]
    fn overlapping_slots_rejected() {
        assert!(PulseSchedule::new(35_752.6, 12_000, 3).is_err());
    }

    #[test]
    fn locate_across_periods() {
        let sched = PulseSchedule::new(35_752.59, 10_000, 3).unwrap();
        for k in [0u64, 1, 17, 1_000_000] {
            let t0 = sched.pulse_time(k);
            assert_eq!(sched.locate(t0, 0), Some((k, 0)));
            assert_eq!(sched.locate(t0 + 100, 0), Some((k, 100)));
            if k > 0 {
                assert_eq!(sched.locate(t0 - 100, 2000), Some((k, -100)));
            }
        }
        assert_eq!(sched.locate(-3000, 2000), None);
    }

    #[test]
    fn routing_by_window() {
        let cfg = ExperimentConfig::default();
        let sw = SwitchSchedule::from_config(&cfg).unwrap();
        let mut rng = StreamRng::new(0, 0, Stage::Test, 0);
        let sched = PulseSchedule::from_config(&cfg).unwrap();
        let k = 5;
        assert_eq!(route_time_slot(sched.slot_time(k, 1) + 1600, &sw, &mut rng).unwrap(), 1);
        assert_eq!(route_time_slot(sched.slot_time(k, 0) - 500, &sw, &mut rng).unwrap(), 0);
        assert_eq!(route_time_slot(sched.slot_time(k, 2) + 7000, &sw, &mut rng).unwrap(), 2);
        // between the last window and the next period
        assert!(matches!(
            route_time_slot(sched.pulse_time(k) + 30_000, &sw, &mut rng),
            Err(Error::Unrouted(_))
        ));
    }

    #[test]
    fn extinction_leak_rate() {
        let mut cfg = ExperimentConfig::default();
        cfg.switch_extinction_db = 20.0;
        let sw = SwitchSchedule::from_config(&cfg).unwrap();
        assert!((sw.leak_probability() - 0.01).abs() < 1e-15);
        let mut rng = StreamRng::new(9, 0, Stage::Test, 0);
        let n = 200_000;
        let leaked = (0..n).filter(|_| sw.leak(1, &mut rng) != 1).count() as f64;
        let sd = (n as f64 * 0.01 * 0.99).sqrt();
        assert!((leaked - n as f64 * 0.01).abs() < 4.0 * sd, "{leaked}");
        let ideal = SwitchSchedule::from_config(&ExperimentConfig::default()).unwrap();
        assert_eq!(ideal.leak_probability(), 0.0);
        assert!((0..1000).all(|_| ideal.leak(0, &mut rng) == 0));
    }
}
