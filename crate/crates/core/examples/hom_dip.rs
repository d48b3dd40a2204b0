//! Four-fold HOM dip between idlers of slots 1 and 2 at 3 dB per path,
//! next to the closed-form prediction.

use entmux::analysis::{hom_scan_levels, hom_visibility};
use entmux::config::HomSettings;
use entmux::ledger::LossLedger;
use entmux::oracle::{analytic_hom, HomParams};
use entmux::sim::{run_hom_experiment, RunOptions};
use entmux::ExperimentConfig;

fn main() -> entmux::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.mu = 0.137;
    cfg.duration_s = 0.1;
    for path in ["T1", "T2", "T3"] {
        cfg.losses.insert(path.into(), LossLedger::parse("path 3.0")?);
    }
    let delays = vec![-30.0, -6.0, -3.0, -1.5, 0.0, 1.5, 3.0, 6.0, 30.0];
    cfg.hom = Some(HomSettings {
        slots: (0, 1),
        delays_ps: delays.clone(),
    });
    let hp = HomParams::from_config(&cfg)?;
    let points = run_hom_experiment(&cfg, &delays, RunOptions::default())?;
    println!("delay_ps  fourfold  dark  oracle");
    for p in &points {
        let o = analytic_hom(p.delay_ps, &hp)?;
        println!("{:8.1}  {:8}  {:4}  {:8.1}", p.delay_ps, p.fourfold, p.dark_fourfold, o.fourfold);
    }
    let levels: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|p| (p.delay_ps, p.fourfold as f64, p.dark_fourfold as f64))
        .collect();
    let (dip, base, dark) = hom_scan_levels(&levels, 4.0 * cfg.coherence_sigma_ps)?;
    let v = hom_visibility(dip, base, Some(dark))?;
    let o = analytic_hom(0.0, &hp)?;
    println!(
        "raw {:.3} +- {:.3} (oracle {:.3}), net {:.3} (oracle {:.3})",
        v.raw,
        v.raw_uncertainty,
        o.raw_visibility,
        v.net.unwrap_or(f64::NAN),
        o.net_visibility
    );
    Ok(())
}
