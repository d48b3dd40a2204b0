//! Batched Monte Carlo engine.
//!
//! Pulses are cut into fixed-size batches. Every random stream is keyed by
//! the batch's first pulse index, so a run's output is the same no matter
//! how many workers process the batches or in what order.

use rayon::prelude::*;

use crate::config::PairStatistics;
use crate::error::{Error, Result};
use crate::quantum::{hom_coincidence_probability, ArrivalDistribution};
use crate::rng::{Stage, StreamRng};
use crate::sim::detect::{detect, inject_noise, DetectionRecord, Origin};
use crate::sim::schedule::{PulseSchedule, SwitchSchedule};
use crate::sim::source::KeptPairSampler;

/// Pulses per batch. Part of the RNG addressing, so changing it changes
/// every simulated record.
pub(crate) const BATCH_PULSES: u64 = 1 << 20;

/// Marginal of a single unpaired photon over (early, central, late, lost)
/// after an analyzer.
const SINGLE_PHOTON_OUTCOMES: [f64; 4] = [0.125, 0.25, 0.125, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Signal = 0,
    Idler = 1,
}

/// Crosstalk and routing bookkeeping, summed over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RoutingStats {
    /// Photons handed to the switch.
    pub routed: u64,
    /// Of those, photons that left by a port other than their slot's.
    pub leaked: u64,
    /// Photons outside every gate window, dropped.
    pub unrouted: u64,
}

impl RoutingStats {
    fn add(&mut self, o: &RoutingStats) {
        self.routed += o.routed;
        self.leaked += o.leaked;
        self.unrouted += o.unrouted;
    }

    pub fn leak_fraction(&self) -> f64 {
        if self.routed == 0 {
            0.0
        } else {
            self.leaked as f64 / self.routed as f64
        }
    }
}

/// Two-source interference arrangement: idlers from ports `arms[0]` and
/// `arms[1]` meet at a balanced coupler, signals herald.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CouplerLayout {
    pub arms: [usize; 2],
    pub overlap: f64,
    pub blocked: Option<usize>,
}

/// Emission in one slot: joint analyzer outcome laws as cumulative tables
/// over `4 * signal + idler`. `None` when no analyzers are installed.
#[derive(Debug, Clone)]
pub(crate) struct SlotSource {
    pub slot: usize,
    pub coherent: Option<[f64; 16]>,
    pub incoherent: Option<[f64; 16]>,
}

impl SlotSource {
    pub(crate) fn plain(slot: usize) -> Self {
        SlotSource {
            slot,
            coherent: None,
            incoherent: None,
        }
    }

    pub(crate) fn analyzed(slot: usize, coherent: &ArrivalDistribution, incoherent: &ArrivalDistribution) -> Self {
        SlotSource {
            slot,
            coherent: Some(cumulative(&coherent.flat())),
            incoherent: Some(cumulative(&incoherent.flat())),
        }
    }
}

fn cumulative(p: &[f64; 16]) -> [f64; 16] {
    let total: f64 = p.iter().sum();
    let mut out = [0.0; 16];
    let mut acc = 0.0;
    for (o, x) in out.iter_mut().zip(p) {
        acc += x / total;
        *o = acc;
    }
    out[15] = 1.0;
    out
}

fn draw_cell(cdf: &[f64; 16], rng: &mut StreamRng) -> usize {
    let u = rng.uniform();
    cdf.partition_point(|&c| c < u).min(15)
}

#[derive(Debug, Clone)]
pub(crate) struct Engine {
    pub seed: u64,
    pub schedule: PulseSchedule,
    pub switch: SwitchSchedule,
    pub pulses: u64,
    pub stats: PairStatistics,
    pub mu: f64,
    /// Raman photons generated per sub-pulse per channel, before losses.
    pub raman_per_pulse: f64,
    pub dark_rate_hz: f64,
    pub jitter_sigma_ps: f64,
    pub path_delay_ps: i64,
    pub imbalance_ps: i64,
    pub eta_port: Vec<f64>,
    pub sources: Vec<SlotSource>,
    pub coupler: Option<CouplerLayout>,
}

/// Records of a finished run, one time-sorted stream per detector.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<Vec<DetectionRecord>>,
    pub routing: RoutingStats,
    pub pulses: u64,
}

impl RunOutput {
    pub fn tags(&self, detector: usize) -> Vec<i64> {
        self.records[detector].iter().map(|r| r.time_tag_ps).collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    pulse: u64,
    offset: i64,
    origin: Origin,
    slot: u8,
}

#[derive(Debug, Clone, Copy)]
struct CouplerInput {
    pulse: u64,
    arm: usize,
    paired: bool,
    slot: u8,
}

struct Batch {
    start: u64,
    end: u64,
    hits: Vec<Vec<Hit>>,
    coupler_in: Vec<CouplerInput>,
    routing: RoutingStats,
}

impl Engine {
    pub(crate) fn n_detectors(&self) -> usize {
        match self.coupler {
            Some(_) => 4,
            None => 2 * self.switch.n_ports(),
        }
    }

    fn eta_max(&self) -> f64 {
        self.eta_port.iter().copied().fold(0.0, f64::max)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.eta_port.len() != self.switch.n_ports() {
            return Err(Error::InvalidConfig("one transmittance per port required".into()));
        }
        if self.eta_port.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::InvalidConfig("transmittance outside [0, 1]".into()));
        }
        if let Some(c) = &self.coupler {
            if c.arms.iter().any(|&a| a >= self.switch.n_ports()) || c.arms[0] == c.arms[1] {
                return Err(Error::InvalidConfig("coupler arms must be two distinct ports".into()));
            }
        }
        Ok(())
    }

    /// Runs all batches on `workers` threads.
    pub(crate) fn run(&self, workers: usize) -> Result<RunOutput> {
        self.validate()?;
        let starts: Vec<u64> = (0..self.pulses).step_by(BATCH_PULSES as usize).collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        let parts: Vec<(Vec<Vec<DetectionRecord>>, RoutingStats)> = pool.install(|| {
            starts
                .par_iter()
                .map(|&s| self.run_batch(s, (s + BATCH_PULSES).min(self.pulses)))
                .collect()
        });

        let n_det = self.n_detectors();
        let mut records: Vec<Vec<DetectionRecord>> = vec![Vec::new(); n_det];
        let mut routing = RoutingStats::default();
        for (recs, r) in parts {
            routing.add(&r);
            for (all, mut part) in records.iter_mut().zip(recs) {
                all.append(&mut part);
            }
        }
        for stream in &mut records {
            // stable, so equal tags keep batch order
            stream.sort_by_key(|r| r.time_tag_ps);
        }
        Ok(RunOutput {
            records,
            routing,
            pulses: self.pulses,
        })
    }

    fn run_batch(&self, start: u64, end: u64) -> (Vec<Vec<DetectionRecord>>, RoutingStats) {
        let mut batch = Batch {
            start,
            end,
            hits: vec![Vec::new(); self.n_detectors()],
            coupler_in: Vec::new(),
            routing: RoutingStats::default(),
        };
        for (lane, src) in self.sources.iter().enumerate() {
            self.emit_slot(&mut batch, lane as u32, src);
        }
        if let Some(layout) = self.coupler {
            self.couple(&mut batch, &layout);
        }
        let records = self.finish(&mut batch);
        (records, batch.routing)
    }

    /// Kept pairs and Raman photons of one slot, up to their detector or
    /// the coupler.
    fn emit_slot(&self, batch: &mut Batch, lane: u32, src: &SlotSource) {
        let pos = batch.start;
        let mut emit = StreamRng::new(self.seed, pos, Stage::Emission, lane);
        let mut analyzer = StreamRng::new(self.seed, pos, Stage::Analyzer, lane);
        let mut routing = StreamRng::new(self.seed, pos, Stage::Routing, lane);
        let mut loss = StreamRng::new(self.seed, pos, Stage::Loss, lane);

        let a = self.eta_max();
        let keep = 1.0 - (1.0 - a) * (1.0 - a);
        let sampler = KeptPairSampler::new(self.stats, self.mu, keep);
        let flag_weights = [a * (1.0 - a), (1.0 - a) * a, a * a];
        let mut pairs = Vec::new();

        if sampler.p_any() > 0.0 {
            let mut k = batch.start;
            loop {
                let gap = sampler.gap(&mut emit);
                k = match k.checked_add(gap) {
                    Some(v) if v < batch.end => v,
                    _ => break,
                };
                sampler.sample(&mut emit, &mut pairs);
                for &coherent in &pairs {
                    let flags = match emit.categorical(&flag_weights) {
                        0 => (true, false),
                        1 => (false, true),
                        _ => (true, true),
                    };
                    let (out_s, out_i) = match (&src.coherent, &src.incoherent) {
                        (Some(coh), Some(inc)) => {
                            let cell = draw_cell(if coherent { coh } else { inc }, &mut analyzer);
                            (cell / 4, cell % 4)
                        }
                        _ => (0, 0),
                    };
                    if flags.0 {
                        self.photon(batch, k, src.slot, Role::Signal, out_s, Origin::Signal, &mut routing, &mut loss);
                    }
                    if flags.1 {
                        self.photon(batch, k, src.slot, Role::Idler, out_i, Origin::Idler, &mut routing, &mut loss);
                    }
                }
                k += 1;
            }
        }

        let mut raman = StreamRng::new(self.seed, pos, Stage::Raman, lane);
        let span = batch.end - batch.start;
        for role in [Role::Signal, Role::Idler] {
            let n = raman.poisson(self.raman_per_pulse * a * span as f64);
            for _ in 0..n {
                let k = batch.start + ((raman.uniform() * span as f64) as u64).min(span - 1);
                let outcome = if src.coherent.is_some() {
                    raman.categorical(&SINGLE_PHOTON_OUTCOMES)
                } else {
                    0
                };
                self.photon(batch, k, src.slot, role, outcome, Origin::Raman, &mut routing, &mut loss);
            }
        }
    }

    /// Routes one surviving-candidate photon. `outcome` is the analyzer
    /// arrival index (3 = unmonitored port), 0 without analyzers.
    #[allow(clippy::too_many_arguments)]
    fn photon(
        &self,
        batch: &mut Batch,
        pulse: u64,
        slot: usize,
        role: Role,
        outcome: usize,
        origin: Origin,
        routing: &mut StreamRng,
        loss: &mut StreamRng,
    ) {
        if outcome > 2 {
            return;
        }
        let emitted = self.schedule.slot_time(pulse, slot);
        let port = match self.switch.scheduled_port(emitted) {
            Ok(p) => self.switch.leak(p, routing),
            Err(_) => {
                batch.routing.unrouted += 1;
                return;
            }
        };
        batch.routing.routed += 1;
        if port != slot {
            batch.routing.leaked += 1;
        }
        if !loss.bernoulli(self.eta_port[port] / self.eta_max()) {
            return;
        }
        let offset = slot as i64 * self.schedule.slot_spacing_ps() + outcome as i64 * self.imbalance_ps;
        let hit = Hit {
            pulse,
            offset,
            origin,
            slot: slot as u8,
        };
        match self.coupler {
            None => batch.hits[2 * port + role as usize].push(hit),
            Some(layout) => {
                let Some(arm) = layout.arms.iter().position(|&a| a == port) else {
                    return;
                };
                match role {
                    Role::Signal => batch.hits[arm].push(hit),
                    Role::Idler => {
                        if layout.blocked != Some(arm) {
                            batch.coupler_in.push(CouplerInput {
                                pulse,
                                arm,
                                paired: origin != Origin::Raman,
                                slot: slot as u8,
                            });
                        }
                    }
                }
            }
        }
    }

    /// Balanced coupler. Exactly one paired idler per arm interferes; any
    /// other combination leaves photon by photon.
    fn couple(&self, batch: &mut Batch, layout: &CouplerLayout) {
        let mut rng = StreamRng::new(self.seed, batch.start, Stage::Coupler, 0);
        let inputs = &mut batch.coupler_in;
        inputs.sort_by_key(|c| c.pulse);
        let split = hom_coincidence_probability(layout.overlap, 0.0).unwrap_or(0.5);
        let offset = self.schedule.slot_spacing_ps() * layout.arms[1] as i64;
        let mut i = 0;
        while i < inputs.len() {
            let pulse = inputs[i].pulse;
            let mut j = i;
            while j < inputs.len() && inputs[j].pulse == pulse {
                j += 1;
            }
            let group = &inputs[i..j];
            let hit = |c: &CouplerInput| Hit {
                pulse,
                offset,
                origin: if c.paired { Origin::Idler } else { Origin::Raman },
                slot: c.slot,
            };
            let interfering =
                group.len() == 2 && group.iter().all(|c| c.paired) && group[0].arm != group[1].arm;
            if interfering {
                if rng.bernoulli(split) {
                    batch.hits[2].push(hit(&group[0]));
                    batch.hits[3].push(hit(&group[1]));
                } else {
                    let out = if rng.bernoulli(0.5) { 2 } else { 3 };
                    batch.hits[out].push(hit(&group[0]));
                }
            } else {
                for c in group {
                    let out = if rng.bernoulli(0.5) { 2 } else { 3 };
                    batch.hits[out].push(hit(c));
                }
            }
            i = j;
        }
    }

    /// Threshold detection, jitter and dark counts.
    fn finish(&self, batch: &mut Batch) -> Vec<Vec<DetectionRecord>> {
        let t0 = self.schedule.pulse_time(batch.start) + self.path_delay_ps;
        let t1 = self.schedule.pulse_time(batch.end) + self.path_delay_ps;
        let mut out = Vec::with_capacity(batch.hits.len());
        for (det, hits) in batch.hits.iter_mut().enumerate() {
            hits.sort_by_key(|h| (h.pulse, h.offset));
            // photons in the same arrival slot of one pulse make one click
            hits.dedup_by_key(|h| (h.pulse, h.offset));
            let mut jitter = StreamRng::new(self.seed, batch.start, Stage::Jitter, det as u32);
            let mut recs: Vec<DetectionRecord> = hits
                .iter()
                .map(|h| {
                    let nominal = self.schedule.pulse_time(h.pulse) + h.offset + self.path_delay_ps;
                    DetectionRecord {
                        detector_id: det as u16,
                        time_tag_ps: detect(nominal as f64, self.jitter_sigma_ps, &mut jitter).max(0),
                        origin: h.origin,
                        source_slot: Some(h.slot),
                    }
                })
                .collect();
            let mut dark = StreamRng::new(self.seed, batch.start, Stage::Dark, det as u32);
            recs.extend(inject_noise(det as u16, self.dark_rate_hz, t0, t1, &mut dark));
            out.push(recs);
        }
        out
    }
}
