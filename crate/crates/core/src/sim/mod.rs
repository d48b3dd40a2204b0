//! Discrete-event Monte Carlo of the multiplexed source, switch network and
//! detectors.

pub mod counting;
pub mod detect;
pub(crate) mod engine;
pub mod experiments;
pub mod schedule;
pub mod source;

pub use counting::{coincidence_count, intersection_count, PeriodicGate};
pub use detect::{apply_loss, detect, inject_noise, DetectionRecord, Origin};
pub use engine::{RoutingStats, RunOutput};
pub use experiments::{
    count_fourfold, cross_slot_coincidences, derive_seed, run_car_experiment, run_fringe_experiment,
    run_hom_experiment, simulate_car_run, simulate_fringe_point, simulate_hom_run, CountSummary, FringePoint,
    HomPoint, RunOptions, SlotCounts,
};
pub use schedule::{generate_pulse_schedule, route_time_slot, PulseSchedule, SwitchSchedule};
pub use source::{emit_pairs, pair_number_pmf, sample_pair_count, PairEmission, Pulse};
