//! Fringe, HOM and CAR experiments assembled from the engine.

use crate::config::{ExperimentConfig, PhaseSweep, SweepTarget};
use crate::error::{Error, Result};
use crate::grid::ChannelGrid;
use crate::ledger::ANALYZER_ELEMENT;
use crate::quantum::{analyzer_transform, pair_state_from_pump, pump_after_umi, temporal_overlap, TemporalMode};
use crate::rng::philox4x32_10;
use crate::sim::counting::{coincidence_count, intersection_count, PeriodicGate};
use crate::sim::detect::Origin;
use crate::sim::engine::{CouplerLayout, Engine, RoutingStats, RunOutput, SlotSource};
use crate::sim::schedule::{PulseSchedule, SwitchSchedule};

/// Execution options that never change results.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }
}

/// Coincidences of one output path's signal and idler detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotCounts {
    /// 0-based path index; path `T{slot+1}`.
    pub slot: usize,
    pub coincidences: u64,
    pub accidentals: u64,
}

/// Counts of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct CountSummary {
    pub pulses: u64,
    pub duration_s: f64,
    /// `(detector name, clicks)`.
    pub singles: Vec<(String, u64)>,
    pub slots: Vec<SlotCounts>,
    pub fourfold: Option<u64>,
    pub routing: RoutingStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringePoint {
    pub phase: f64,
    pub summary: CountSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomPoint {
    pub delay_ps: f64,
    pub fourfold: u64,
    /// Fourfolds with one idler arm blocked, summed over both arms.
    pub dark_fourfold: u64,
    pub summary: CountSummary,
}

/// Independent seed for the `index`-th run derived from a base seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let out = philox4x32_10(
        [index as u32, (index >> 32) as u32, 0x5eed_0001, 0],
        [seed as u32, (seed >> 32) as u32],
    );
    (out[0] as u64) | ((out[1] as u64) << 32)
}

/// Loads the configured channel grid, or the built-in one.
pub fn config_grid(cfg: &ExperimentConfig) -> Result<ChannelGrid> {
    match &cfg.grid_file {
        Some(p) => ChannelGrid::load(std::path::Path::new(p)),
        None => Ok(ChannelGrid::default()),
    }
}

/// `S8`/`I8` style prefixes of the configured channel pair.
fn pair_labels(cfg: &ExperimentConfig) -> (String, String) {
    let k = cfg.channel_pair;
    (format!("S{k}"), format!("I{k}"))
}

pub(crate) fn port_detector_names(cfg: &ExperimentConfig) -> Vec<String> {
    let (s, i) = pair_labels(cfg);
    (0..cfg.n_slots)
        .flat_map(|p| [format!("{s}-T{}", p + 1), format!("{i}-T{}", p + 1)])
        .collect()
}

fn check_channel(cfg: &ExperimentConfig) -> Result<()> {
    let grid = config_grid(cfg)?;
    let pump = grid.channel(cfg.pump_channel)?;
    grid.pair_for_index(cfg.channel_pair, pump)?;
    Ok(())
}

fn transmittances(cfg: &ExperimentConfig, analyzers: bool) -> Result<Vec<f64>> {
    (0..cfg.n_slots)
        .map(|p| {
            let l = cfg.ledger(p)?;
            Ok(if analyzers {
                l.transmittance()
            } else {
                l.without(ANALYZER_ELEMENT).transmittance()
            })
        })
        .collect()
}

fn base_engine(cfg: &ExperimentConfig, seed: u64, analyzers: bool) -> Result<Engine> {
    let schedule = PulseSchedule::from_config(cfg)?;
    Ok(Engine {
        seed,
        schedule,
        switch: SwitchSchedule::from_config(cfg)?,
        pulses: cfg.pulses(),
        stats: cfg.pair_statistics,
        mu: cfg.mu,
        raman_per_pulse: cfg.raman_rate_for_pair(cfg.channel_pair),
        dark_rate_hz: cfg.dark_rate_hz,
        jitter_sigma_ps: cfg.detector_jitter_sigma_ps,
        path_delay_ps: cfg.path_delay_ps,
        imbalance_ps: cfg.umi_imbalance_ps(),
        eta_port: transmittances(cfg, analyzers)?,
        sources: Vec::new(),
        coupler: None,
    })
}

/// Joint outcome laws of every slot for the configured phases.
pub(crate) fn analyzed_sources(cfg: &ExperimentConfig) -> Result<Vec<SlotSource>> {
    (0..cfg.n_slots)
        .map(|j| {
            let pair = pair_state_from_pump(&pump_after_umi(cfg.pump_phase_for_slot(j))?)?;
            let coh = analyzer_transform(&pair, cfg.signal_phase, cfg.idler_phase, cfg.v_cap)?;
            let inc = analyzer_transform(&pair, cfg.signal_phase, cfg.idler_phase, 0.0)?;
            Ok(SlotSource::analyzed(j, &coh, &inc))
        })
        .collect()
}

fn singles(names: &[String], run: &RunOutput) -> Vec<(String, u64)> {
    names
        .iter()
        .zip(&run.records)
        .map(|(n, r)| (n.clone(), r.len() as u64))
        .collect()
}

/// Coincidences in each path, gated on the arrival slot `arrival` of the
/// path's own sub-pulse (0 early/plain, 1 central, 2 late).
fn slot_counts(cfg: &ExperimentConfig, run: &RunOutput, arrival: i64) -> Result<Vec<SlotCounts>> {
    let schedule = PulseSchedule::from_config(cfg)?;
    let w = cfg.coincidence_window_ps;
    (0..cfg.n_slots)
        .map(|j| {
            let gate = PeriodicGate {
                schedule,
                center_ps: cfg.path_delay_ps + j as i64 * schedule.slot_spacing_ps() + arrival * cfg.umi_imbalance_ps(),
                width_ps: w,
            };
            let s = gate.filter(&run.tags(2 * j));
            let i = gate.filter(&run.tags(2 * j + 1));
            let (coincidences, accidentals) = coincidence_count(&s, &i, w, schedule.period_ps_rounded())?;
            Ok(SlotCounts {
                slot: j,
                coincidences,
                accidentals,
            })
        })
        .collect()
}

fn fringe_config(cfg: &ExperimentConfig, target: SweepTarget, x: f64) -> ExperimentConfig {
    let mut c = cfg.clone();
    match target {
        SweepTarget::Pump => {
            c.pump_phase = (0..cfg.n_slots).map(|j| cfg.pump_phase_for_slot(j) + x).collect();
        }
        SweepTarget::Signal => c.signal_phase = x,
        SweepTarget::Idler => c.idler_phase = x,
    }
    c
}

/// Full simulation of one fringe setting; records included.
pub fn simulate_fringe_point(cfg: &ExperimentConfig, seed: u64, opts: RunOptions) -> Result<RunOutput> {
    cfg.validate()?;
    check_channel(cfg)?;
    let mut engine = base_engine(cfg, seed, true)?;
    engine.sources = analyzed_sources(cfg)?;
    engine.run(opts.workers)
}

/// Central-central coincidence counts across a phase sweep.
pub fn run_fringe_experiment(cfg: &ExperimentConfig, sweep: &PhaseSweep, opts: RunOptions) -> Result<Vec<FringePoint>> {
    cfg.validate()?;
    if sweep.points < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: sweep.points,
        });
    }
    let names = port_detector_names(cfg);
    sweep
        .phases()
        .into_iter()
        .enumerate()
        .map(|(idx, x)| {
            let point_cfg = fringe_config(cfg, sweep.target, x);
            let run = simulate_fringe_point(&point_cfg, derive_seed(cfg.rng_seed, idx as u64), opts)?;
            log::debug!("fringe point {idx}: phase {x:.4}, routed {}", run.routing.routed);
            Ok(FringePoint {
                phase: x,
                summary: CountSummary {
                    pulses: run.pulses,
                    duration_s: cfg.duration_s,
                    singles: singles(&names, &run),
                    slots: slot_counts(cfg, &run, 1)?,
                    fourfold: None,
                    routing: run.routing,
                },
            })
        })
        .collect()
}

/// Analyzer-free run for the coincidence-to-accidental ratio; the
/// analyzer's ledger entry is dropped.
pub fn simulate_car_run(cfg: &ExperimentConfig, seed: u64, opts: RunOptions) -> Result<RunOutput> {
    cfg.validate()?;
    check_channel(cfg)?;
    let mut engine = base_engine(cfg, seed, false)?;
    engine.sources = (0..cfg.n_slots).map(SlotSource::plain).collect();
    engine.run(opts.workers)
}

/// Coincidences and accidentals per path without analyzers.
pub fn run_car_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<CountSummary> {
    let run = simulate_car_run(cfg, cfg.rng_seed, opts)?;
    Ok(CountSummary {
        pulses: run.pulses,
        duration_s: cfg.duration_s,
        singles: singles(&port_detector_names(cfg), &run),
        slots: slot_counts(cfg, &run, 0)?,
        fourfold: None,
        routing: run.routing,
    })
}

/// Detector names of the HOM arrangement.
pub fn hom_detector_names(cfg: &ExperimentConfig, slots: (usize, usize)) -> Vec<String> {
    let (s, _) = pair_labels(cfg);
    vec![
        format!("{s}-T{}", slots.0 + 1),
        format!("{s}-T{}", slots.1 + 1),
        "D1".to_string(),
        "D2".to_string(),
    ]
}

/// One HOM configuration: `blocked` idler arm (0 or 1) or none.
pub fn simulate_hom_run(
    cfg: &ExperimentConfig,
    slots: (usize, usize),
    delay_ps: f64,
    blocked: Option<usize>,
    seed: u64,
    opts: RunOptions,
) -> Result<RunOutput> {
    cfg.validate()?;
    check_channel(cfg)?;
    if slots.0 == slots.1 || slots.0 >= cfg.n_slots || slots.1 >= cfg.n_slots {
        return Err(Error::InvalidConfig("HOM needs two distinct configured slots".into()));
    }
    if !delay_ps.is_finite() {
        return Err(Error::OutOfRange {
            name: "delay_ps",
            value: delay_ps,
        });
    }
    let mode = TemporalMode::new(0.0, cfg.coherence_sigma_ps)?;
    let mut engine = base_engine(cfg, seed, false)?;
    engine.sources = vec![SlotSource::plain(slots.0), SlotSource::plain(slots.1)];
    engine.coupler = Some(CouplerLayout {
        arms: [slots.0, slots.1],
        overlap: temporal_overlap(delay_ps, &mode),
        blocked,
    });
    engine.run(opts.workers)
}

/// Pulses in which all four HOM detectors fire inside their gates.
pub fn count_fourfold(cfg: &ExperimentConfig, slots: (usize, usize), run: &RunOutput) -> Result<u64> {
    let schedule = PulseSchedule::from_config(cfg)?;
    let sp = schedule.slot_spacing_ps();
    let centers = [slots.0 as i64 * sp, slots.1 as i64 * sp, slots.1 as i64 * sp, slots.1 as i64 * sp];
    let lists: Vec<Vec<u64>> = centers
        .iter()
        .enumerate()
        .map(|(d, c)| {
            PeriodicGate {
                schedule,
                center_ps: cfg.path_delay_ps + c,
                width_ps: cfg.coincidence_window_ps,
            }
            .occupied_pulses(&run.tags(d))
        })
        .collect();
    Ok(intersection_count(&lists))
}

/// Fourfold counts versus coupler delay, each with its blocked-arm
/// dark measurement.
pub fn run_hom_experiment(cfg: &ExperimentConfig, delays_ps: &[f64], opts: RunOptions) -> Result<Vec<HomPoint>> {
    let hom = cfg
        .hom
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("HOM run needs hom.slots".into()))?;
    if delays_ps.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, got: 0 });
    }
    let slots = hom.slots;
    let names = hom_detector_names(cfg, slots);
    delays_ps
        .iter()
        .enumerate()
        .map(|(idx, &d)| {
            let base = 3 * idx as u64;
            let run = simulate_hom_run(cfg, slots, d, None, derive_seed(cfg.rng_seed, base), opts)?;
            let fourfold = count_fourfold(cfg, slots, &run)?;
            let mut dark_fourfold = 0;
            for arm in 0..2 {
                let blocked = simulate_hom_run(cfg, slots, d, Some(arm), derive_seed(cfg.rng_seed, base + 1 + arm as u64), opts)?;
                dark_fourfold += count_fourfold(cfg, slots, &blocked)?;
            }
            log::debug!("hom delay {d} ps: fourfold {fourfold}, dark {dark_fourfold}");
            Ok(HomPoint {
                delay_ps: d,
                fourfold,
                dark_fourfold,
                summary: CountSummary {
                    pulses: run.pulses,
                    duration_s: cfg.duration_s,
                    singles: singles(&names, &run),
                    slots: Vec::new(),
                    fourfold: Some(fourfold),
                    routing: run.routing,
                },
            })
        })
        .collect()
}

/// Coincidences between photons of different sub-pulses at each path's
/// detector pair, ungated. Reads the diagnostic origin fields.
pub fn cross_slot_coincidences(run: &RunOutput, n_ports: usize, window_ps: i64) -> u64 {
    let half = window_ps / 2;
    let mut total = 0;
    for p in 0..n_ports {
        let photons = |d: usize| -> Vec<(i64, u8)> {
            run.records[d]
                .iter()
                .filter(|r| r.origin != Origin::Dark && r.origin != Origin::Raman)
                .filter_map(|r| r.source_slot.map(|s| (r.time_tag_ps, s)))
                .collect()
        };
        let (s, i) = (photons(2 * p), photons(2 * p + 1));
        let mut lo = 0;
        for &(t, slot) in &s {
            while lo < i.len() && i[lo].0 < t - half {
                lo += 1;
            }
            total += i[lo..]
                .iter()
                .take_while(|x| x.0 <= t + half)
                .filter(|x| x.1 != slot)
                .count() as u64;
        }
    }
    total
}
