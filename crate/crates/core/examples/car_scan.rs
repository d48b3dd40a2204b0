//! Coincidence-to-accidental ratio on slot 1 as the pair rate grows.

use entmux::analysis::{car_uncertainty, compute_car};
use entmux::oracle::{analytic_car, OracleParams};
use entmux::sim::{run_car_experiment, RunOptions};
use entmux::ExperimentConfig;

fn main() -> entmux::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.duration_s = 1.0;
    println!("mu      CAR              oracle");
    for mu in [0.02, 0.05, 0.1, 0.137, 0.2] {
        cfg.mu = mu;
        let s = run_car_experiment(&cfg, RunOptions::default())?;
        let (c, a) = (s.slots[0].coincidences as f64, s.slots[0].accidentals as f64);
        let oracle = analytic_car(&OracleParams::for_car(&cfg, 0)?)?;
        println!("{mu:<6}  {:6.2} +- {:5.2}  {oracle:6.2}", compute_car(c, a)?, car_uncertainty(c, a)?);
    }
    Ok(())
}
