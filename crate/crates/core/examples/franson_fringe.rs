//! Sweeps the pump phase at the published losses and fits the fringe on
//! each time slot. Pass a duration per point in seconds (default 20).

use std::f64::consts::{PI, TAU};

use entmux::analysis::{chsh_violation, fit_fringe, subtract_accidentals};
use entmux::config::{PhaseSweep, SweepTarget};
use entmux::oracle::{expected_fringe_visibility, OracleParams};
use entmux::sim::{run_fringe_experiment, RunOptions};
use entmux::ExperimentConfig;

fn main() -> entmux::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.duration_s = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20.0);
    let sweep = PhaseSweep {
        target: SweepTarget::Pump,
        start: 0.0,
        stop: TAU,
        points: 17,
    };
    let points = run_fringe_experiment(&cfg, &sweep, RunOptions::default())?;
    for slot in 0..cfg.n_slots {
        let raw: Vec<(f64, f64, f64)> = points
            .iter()
            .map(|p| {
                let c = &p.summary.slots[slot];
                (p.phase, c.coincidences as f64, c.accidentals as f64)
            })
            .collect();
        let pts: Vec<(f64, f64)> = raw.iter().map(|&(x, c, _)| (x, c)).collect();
        let fit = fit_fringe(&pts, Some(PI))?;
        let sub = fit_fringe(&subtract_accidentals(&raw), Some(PI))?;
        let (v_raw, v_sub) = expected_fringe_visibility(&OracleParams::for_fringe(&cfg, slot)?)?;
        println!(
            "T{}: V = {:.3} (oracle {v_raw:.3}), subtracted {:.3} (oracle {v_sub:.3}), CHSH {}",
            slot + 1,
            fit.visibility,
            sub.visibility,
            if chsh_violation(fit.visibility)? { "violated" } else { "not violated" }
        );
    }
    Ok(())
}
