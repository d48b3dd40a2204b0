//! Experiment configuration and its flat `key = value` file format.
//!
//! Lines are `key = value`; `#` starts a comment. Unknown keys are errors.
//! Lists are comma separated. Loss ledgers are written
//! `loss.T1 = waveguide 5.00, dwdm 2.00, ...`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ledger::{default_path_ledger, LossLedger};
use crate::quantum::coherence_sigma_for_bandwidth;

/// Pair-number statistics per pulse and channel pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairStatistics {
    /// Bose-Einstein, a single spectral mode.
    Thermal,
    Poisson,
    /// At most one pair per pulse, emitted with probability `mu`.
    Single,
}

impl PairStatistics {
    pub fn name(self) -> &'static str {
        match self {
            PairStatistics::Thermal => "thermal",
            PairStatistics::Poisson => "poisson",
            PairStatistics::Single => "single",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "thermal" => Some(PairStatistics::Thermal),
            "poisson" => Some(PairStatistics::Poisson),
            "single" => Some(PairStatistics::Single),
            _ => None,
        }
    }
}

/// Which interferometer phase a fringe sweep scans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepTarget {
    /// All pump interferometers together, on top of their configured phases.
    Pump,
    Signal,
    Idler,
}

impl SweepTarget {
    pub fn name(self) -> &'static str {
        match self {
            SweepTarget::Pump => "pump",
            SweepTarget::Signal => "signal",
            SweepTarget::Idler => "idler",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSweep {
    pub target: SweepTarget,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl PhaseSweep {
    /// Evenly spaced phases from `start` to `stop` inclusive.
    pub fn phases(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomSettings {
    /// 0-based source slots whose idlers meet at the coupler (written
    /// 1-based in config files).
    pub slots: (usize, usize),
    pub delays_ps: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanTarget {
    Mu,
    Channel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSettings {
    pub target: ScanTarget,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub rep_rate_mhz: f64,
    pub slot_spacing_ns: f64,
    pub n_slots: usize,
    pub umi_imbalance_ns: f64,
    /// Fixed source-to-detector latency added to every photon tag.
    pub path_delay_ps: i64,
    pub pump_phase: Vec<f64>,
    pub signal_phase: f64,
    pub idler_phase: f64,
    pub v_cap: f64,
    pub pump_channel: u32,
    pub channel_pair: usize,
    pub grid_file: Option<String>,
    pub pair_statistics: PairStatistics,
    pub mu: f64,
    /// Raman photons generated per sub-pulse in each channel, before losses.
    pub raman_singles_rate: f64,
    /// Per channel-pair override of `raman_singles_rate`.
    pub raman_by_pair: BTreeMap<usize, f64>,
    pub dark_rate_hz: f64,
    pub detector_jitter_sigma_ps: f64,
    pub coincidence_window_ps: i64,
    pub switch_extinction_db: f64,
    pub switch_guard_ps: i64,
    pub switch_delay_ps: i64,
    pub coherence_sigma_ps: f64,
    /// Loss ledger per output path, keyed `T1`, `T2`, ...
    pub losses: BTreeMap<String, LossLedger>,
    pub duration_s: f64,
    pub rng_seed: u64,
    pub sweep: Option<PhaseSweep>,
    pub hom: Option<HomSettings>,
    pub scan: Option<ScanSettings>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut losses = BTreeMap::new();
        losses.insert("T1".to_string(), default_path_ledger(1));
        losses.insert("T2".to_string(), default_path_ledger(2));
        losses.insert("T3".to_string(), default_path_ledger(2));
        ExperimentConfig {
            rep_rate_mhz: 27.97,
            slot_spacing_ns: 10.0,
            n_slots: 3,
            umi_imbalance_ns: 1.6,
            path_delay_ps: 50_000,
            pump_phase: vec![0.0; 3],
            signal_phase: 0.0,
            idler_phase: 0.0,
            v_cap: 0.985,
            pump_channel: crate::grid::DEFAULT_PUMP_CHANNEL,
            channel_pair: 8,
            grid_file: None,
            pair_statistics: PairStatistics::Thermal,
            mu: 0.0085,
            raman_singles_rate: 0.012,
            raman_by_pair: BTreeMap::new(),
            dark_rate_hz: 100.0,
            detector_jitter_sigma_ps: 50.0,
            coincidence_window_ps: 1000,
            switch_extinction_db: f64::INFINITY,
            switch_guard_ps: 2000,
            switch_delay_ps: 0,
            coherence_sigma_ps: coherence_sigma_for_bandwidth(100.0),
            losses,
            duration_s: 10.0,
            rng_seed: 1,
            sweep: None,
            hom: None,
            scan: None,
        }
    }
}

pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..points)
            .map(|k| start + (stop - start) * k as f64 / (points - 1) as f64)
            .collect(),
    }
}

fn parse_f64(v: &str) -> Option<f64> {
    match v {
        "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
        _ => v.parse().ok().filter(|x: &f64| x.is_finite()),
    }
}

fn parse_list(v: &str) -> Option<Vec<f64>> {
    v.split(',').map(|s| parse_f64(s.trim())).collect()
}

impl ExperimentConfig {
    pub fn pulse_period_ps(&self) -> f64 {
        1e6 / self.rep_rate_mhz
    }

    pub fn slot_spacing_ps(&self) -> i64 {
        (self.slot_spacing_ns * 1000.0).round() as i64
    }

    pub fn umi_imbalance_ps(&self) -> i64 {
        (self.umi_imbalance_ns * 1000.0).round() as i64
    }

    /// Number of pump periods covered by `duration_s`.
    pub fn pulses(&self) -> u64 {
        (self.duration_s * self.rep_rate_mhz * 1e6).round() as u64
    }

    pub fn pump_phase_for_slot(&self, slot: usize) -> f64 {
        self.pump_phase.get(slot).copied().unwrap_or(0.0)
    }

    /// Ledger for 0-based output path `port`.
    pub fn ledger(&self, port: usize) -> Result<&LossLedger> {
        let key = format!("T{}", port + 1);
        self.losses
            .get(&key)
            .ok_or_else(|| Error::InvalidConfig(format!("no loss ledger for path {key}")))
    }

    pub fn raman_rate_for_pair(&self, pair_index: usize) -> f64 {
        self.raman_by_pair
            .get(&pair_index)
            .copied()
            .unwrap_or(self.raman_singles_rate)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.rep_rate_mhz > 0.0) {
            return bad("rep_rate_mhz must be positive".into());
        }
        if self.n_slots == 0 {
            return bad("n_slots must be at least 1".into());
        }
        if self.n_slots as f64 * self.slot_spacing_ns * 1000.0 >= self.pulse_period_ps() {
            return bad(format!(
                "{} slots spaced {} ns overlap the {:.2} ns pump period",
                self.n_slots,
                self.slot_spacing_ns,
                self.pulse_period_ps() / 1000.0
            ));
        }
        if self.umi_imbalance_ps() <= self.coincidence_window_ps {
            return bad("umi_imbalance_ns must exceed the coincidence window".into());
        }
        if self.coincidence_window_ps <= 0 {
            return bad("coincidence_window_ps must be positive".into());
        }
        if self.switch_guard_ps < 0 || self.umi_imbalance_ps() + self.switch_guard_ps >= self.slot_spacing_ps() {
            return bad("time bins do not fit inside a switch gate".into());
        }
        if self.pump_phase.len() != self.n_slots {
            return bad(format!(
                "pump_phase lists {} values for {} slots",
                self.pump_phase.len(),
                self.n_slots
            ));
        }
        if !(0.0..=1.0).contains(&self.v_cap) {
            return Err(Error::OutOfRange {
                name: "v_cap",
                value: self.v_cap,
            });
        }
        if !(self.mu >= 0.0) || (self.pair_statistics == PairStatistics::Single && self.mu > 1.0) {
            return Err(Error::OutOfRange {
                name: "mu",
                value: self.mu,
            });
        }
        for (name, v) in [
            ("raman_singles_rate", self.raman_singles_rate),
            ("dark_rate_hz", self.dark_rate_hz),
            ("detector_jitter_sigma_ps", self.detector_jitter_sigma_ps),
        ] {
            if !(v >= 0.0) {
                return Err(Error::OutOfRange { name, value: v });
            }
        }
        if self.raman_by_pair.values().any(|v| !(*v >= 0.0)) {
            return bad("per-pair raman rates must be non-negative".into());
        }
        if !(self.switch_extinction_db >= 0.0) {
            return Err(Error::OutOfRange {
                name: "switch_extinction_db",
                value: self.switch_extinction_db,
            });
        }
        if !(self.coherence_sigma_ps > 0.0) {
            return Err(Error::OutOfRange {
                name: "coherence_sigma_ps",
                value: self.coherence_sigma_ps,
            });
        }
        if !(self.duration_s > 0.0) || self.pulses() == 0 {
            return Err(Error::OutOfRange {
                name: "duration_s",
                value: self.duration_s,
            });
        }
        for port in 0..self.n_slots {
            self.ledger(port)?;
        }
        if self.path_delay_ps < 10 * self.umi_imbalance_ps() {
            return bad("path_delay_ps is too short to keep time tags positive".into());
        }
        if let Some(sweep) = &self.sweep {
            if sweep.points < 2 {
                return Err(Error::InsufficientPoints {
                    needed: 2,
                    got: sweep.points,
                });
            }
        }
        if let Some(hom) = &self.hom {
            let (a, b) = hom.slots;
            if a == b || a >= self.n_slots || b >= self.n_slots {
                return bad(format!("hom.slots must name two distinct slots in 1..={}", self.n_slots));
            }
            if hom.delays_ps.is_empty() {
                return bad("hom delays are empty".into());
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Parses a config file on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut losses_seen = false;
        let mut pump_phase_set = false;
        let mut sweep = (None::<SweepTarget>, 0.0, std::f64::consts::TAU, 21usize);
        let mut sweep_seen = false;
        let mut hom_slots: Option<(usize, usize)> = None;
        let mut hom_delays: Option<Vec<f64>> = None;
        let mut hom_range: Option<(f64, f64, usize)> = None;
        let mut scan_target: Option<ScanTarget> = None;
        let mut scan_values: Option<Vec<f64>> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Config { line: line_no, msg };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err("expected 'key = value'".into()))?;
            let num = || parse_f64(value).ok_or_else(|| err(format!("invalid number '{value}' for {key}")));
            let int = || {
                value
                    .parse::<u64>()
                    .map_err(|_| err(format!("invalid integer '{value}' for {key}")))
            };
            let signed = || {
                value
                    .parse::<i64>()
                    .map_err(|_| err(format!("invalid integer '{value}' for {key}")))
            };
            let list = || parse_list(value).ok_or_else(|| err(format!("invalid list '{value}' for {key}")));

            if let Some(path) = key.strip_prefix("loss.") {
                if !losses_seen {
                    cfg.losses.clear();
                    losses_seen = true;
                }
                let ledger = LossLedger::parse(value).map_err(|e| err(e.to_string()))?;
                cfg.losses.insert(path.to_string(), ledger);
                continue;
            }
            if let Some(pair) = key.strip_prefix("raman_singles_rate.") {
                let k: usize = pair.parse().map_err(|_| err(format!("bad pair index in {key}")))?;
                cfg.raman_by_pair.insert(k, num()?);
                continue;
            }
            match key {
                "rep_rate_mhz" => cfg.rep_rate_mhz = num()?,
                "slot_spacing_ns" => cfg.slot_spacing_ns = num()?,
                "n_slots" => cfg.n_slots = int()? as usize,
                "umi_imbalance_ns" => cfg.umi_imbalance_ns = num()?,
                "path_delay_ps" => cfg.path_delay_ps = signed()?,
                "pump_phase" => {
                    cfg.pump_phase = list()?;
                    pump_phase_set = true;
                }
                "signal_phase" => cfg.signal_phase = num()?,
                "idler_phase" => cfg.idler_phase = num()?,
                "v_cap" => cfg.v_cap = num()?,
                "pump_channel" => cfg.pump_channel = int()? as u32,
                "channel_pair" => cfg.channel_pair = int()? as usize,
                "grid_file" => cfg.grid_file = Some(value.to_string()),
                "pair_statistics" => {
                    cfg.pair_statistics =
                        PairStatistics::parse(value).ok_or_else(|| err(format!("unknown pair statistics '{value}'")))?
                }
                "mu" => cfg.mu = num()?,
                "raman_singles_rate" => cfg.raman_singles_rate = num()?,
                "dark_rate_hz" => cfg.dark_rate_hz = num()?,
                "detector_jitter_sigma_ps" => cfg.detector_jitter_sigma_ps = num()?,
                "coincidence_window_ps" => cfg.coincidence_window_ps = signed()?,
                "switch_extinction_db" => cfg.switch_extinction_db = num()?,
                "switch_guard_ps" => cfg.switch_guard_ps = signed()?,
                "switch_delay_ps" => cfg.switch_delay_ps = signed()?,
                "coherence_sigma_ps" => cfg.coherence_sigma_ps = num()?,
                "filter_bandwidth_ghz" => cfg.coherence_sigma_ps = coherence_sigma_for_bandwidth(num()?),
                "duration_s" => cfg.duration_s = num()?,
                "rng_seed" => cfg.rng_seed = int()?,
                "sweep.target" => {
                    sweep_seen = true;
                    sweep.0 = Some(match value {
                        "pump" => SweepTarget::Pump,
                        "signal" => SweepTarget::Signal,
                        "idler" => SweepTarget::Idler,
                        _ => return Err(err(format!("unknown sweep target '{value}'"))),
                    })
                }
                "sweep.start" => {
                    sweep_seen = true;
                    sweep.1 = num()?
                }
                "sweep.stop" => {
                    sweep_seen = true;
                    sweep.2 = num()?
                }
                "sweep.points" => {
                    sweep_seen = true;
                    sweep.3 = int()? as usize
                }
                "hom.slots" => {
                    let v = list()?;
                    if v.len() != 2 || v.iter().any(|x| x.fract() != 0.0 || *x < 1.0) {
                        return Err(err("hom.slots needs two slot numbers".into()));
                    }
                    hom_slots = Some((v[0] as usize - 1, v[1] as usize - 1));
                }
                "hom.delays_ps" => hom_delays = Some(list()?),
                "hom.delay_range_ps" => {
                    let v = list()?;
                    if v.len() != 3 || v[2].fract() != 0.0 || v[2] < 1.0 {
                        return Err(err("hom.delay_range_ps is 'start, stop, points'".into()));
                    }
                    hom_range = Some((v[0], v[1], v[2] as usize));
                }
                "scan.target" => {
                    scan_target = Some(match value {
                        "mu" => ScanTarget::Mu,
                        "channel" => ScanTarget::Channel,
                        _ => return Err(err(format!("unknown scan target '{value}'"))),
                    })
                }
                "scan.values" => scan_values = Some(list()?),
                _ => return Err(err(format!("unknown key '{key}'"))),
            }
        }

        if !pump_phase_set {
            cfg.pump_phase = vec![0.0; cfg.n_slots];
        } else if cfg.pump_phase.len() == 1 && cfg.n_slots > 1 {
            cfg.pump_phase = vec![cfg.pump_phase[0]; cfg.n_slots];
        }
        if sweep_seen {
            cfg.sweep = Some(PhaseSweep {
                target: sweep.0.unwrap_or(SweepTarget::Pump),
                start: sweep.1,
                stop: sweep.2,
                points: sweep.3,
            });
        }
        if hom_slots.is_some() || hom_delays.is_some() || hom_range.is_some() {
            let slots = hom_slots.ok_or_else(|| Error::InvalidConfig("hom stanza without hom.slots".into()))?;
            let delays_ps = match (hom_delays, hom_range) {
                (Some(d), None) => d,
                (None, Some((a, b, n))) => linspace(a, b, n),
                (None, None) => linspace(-10.0, 10.0, 11),
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidConfig(
                        "give either hom.delays_ps or hom.delay_range_ps".into(),
                    ))
                }
            };
            cfg.hom = Some(HomSettings { slots, delays_ps });
        }
        match (scan_target, scan_values) {
            (Some(target), Some(values)) => cfg.scan = Some(ScanSettings { target, values }),
            (None, None) => {}
            _ => return Err(Error::InvalidConfig("scan needs both scan.target and scan.values".into())),
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Renders the config in the file format; `parse(to_text())` round-trips.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let fmt_list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let fmt_num = |x: f64| if x.is_infinite() { "inf".to_string() } else { format!("{x:?}") };
        let _ = writeln!(s, "rep_rate_mhz = {:?}", self.rep_rate_mhz);
        let _ = writeln!(s, "slot_spacing_ns = {:?}", self.slot_spacing_ns);
        let _ = writeln!(s, "n_slots = {}", self.n_slots);
        let _ = writeln!(s, "umi_imbalance_ns = {:?}", self.umi_imbalance_ns);
        let _ = writeln!(s, "path_delay_ps = {}", self.path_delay_ps);
        let _ = writeln!(s, "pump_phase = {}", fmt_list(&self.pump_phase));
        let _ = writeln!(s, "signal_phase = {:?}", self.signal_phase);
        let _ = writeln!(s, "idler_phase = {:?}", self.idler_phase);
        let _ = writeln!(s, "v_cap = {:?}", self.v_cap);
        let _ = writeln!(s, "pump_channel = {}", self.pump_channel);
        let _ = writeln!(s, "channel_pair = {}", self.channel_pair);
        if let Some(g) = &self.grid_file {
            let _ = writeln!(s, "grid_file = {g}");
        }
        let _ = writeln!(s, "pair_statistics = {}", self.pair_statistics.name());
        let _ = writeln!(s, "mu = {:?}", self.mu);
        let _ = writeln!(s, "raman_singles_rate = {:?}", self.raman_singles_rate);
        for (k, v) in &self.raman_by_pair {
            let _ = writeln!(s, "raman_singles_rate.{k} = {v:?}");
        }
        let _ = writeln!(s, "dark_rate_hz = {:?}", self.dark_rate_hz);
        let _ = writeln!(s, "detector_jitter_sigma_ps = {:?}", self.detector_jitter_sigma_ps);
        let _ = writeln!(s, "coincidence_window_ps = {}", self.coincidence_window_ps);
        let _ = writeln!(s, "switch_extinction_db = {}", fmt_num(self.switch_extinction_db));
        let _ = writeln!(s, "switch_guard_ps = {}", self.switch_guard_ps);
        let _ = writeln!(s, "switch_delay_ps = {}", self.switch_delay_ps);
        let _ = writeln!(s, "coherence_sigma_ps = {:?}", self.coherence_sigma_ps);
        for (path, ledger) in &self.losses {
            let _ = writeln!(s, "loss.{path} = {ledger}");
        }
        let _ = writeln!(s, "duration_s = {:?}", self.duration_s);
        let _ = writeln!(s, "rng_seed = {}", self.rng_seed);
        if let Some(sw) = &self.sweep {
            let _ = writeln!(s, "sweep.target = {}", sw.target.name());
            let _ = writeln!(s, "sweep.start = {:?}", sw.start);
            let _ = writeln!(s, "sweep.stop = {:?}", sw.stop);
            let _ = writeln!(s, "sweep.points = {}", sw.points);
        }
        if let Some(h) = &self.hom {
            let _ = writeln!(s, "hom.slots = {}, {}", h.slots.0 + 1, h.slots.1 + 1);
            let _ = writeln!(s, "hom.delays_ps = {}", fmt_list(&h.delays_ps));
        }
        if let Some(sc) = &self.scan {
            let t = match sc.target {
                ScanTarget::Mu => "mu",
                ScanTarget::Channel => "channel",
            };
            let _ = writeln!(s, "scan.target = {t}");
            let _ = writeln!(s, "scan.values = {}", fmt_list(&sc.values));
        }
        s
    }
}
