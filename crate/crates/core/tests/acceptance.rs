//! Acceptance checks. Each test prints one `[PASS]`/`[FAIL]` line straight
//! to stdout (bypassing the harness capture) and then asserts.
//!
//! Criteria share one core poorly, so a lock runs them one at a time and
//! each runtime is measured alone.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use entmux::analysis::{chsh_violation, compute_car, car_uncertainty, fit_fringe, hom_scan_levels, hom_visibility, subtract_accidentals};
use entmux::config::{HomSettings, PairStatistics, PhaseSweep, SweepTarget};
use entmux::grid::{energy_conservation_check, ChannelGrid, DEFAULT_PUMP_CHANNEL};
use entmux::ledger::LossLedger;
use entmux::oracle::{analytic_car, analytic_fringe, analytic_hom, brute_force_full_table, poisson_accidentals, HomParams, OracleParams};
use entmux::quantum::{analyzer_transform, pair_state_from_pump, pump_after_umi, Outcome};
use entmux::sim::{
    coincidence_count, cross_slot_coincidences, run_car_experiment, run_fringe_experiment, run_hom_experiment,
    simulate_car_run, RunOptions,
};
use entmux::ExperimentConfig;
use rand::{Rng, SeedableRng};
use rand::rngs::StdRng;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(n: u32, name: &str, pass: bool, elapsed: Duration, budget_s: f64, detail: &str) -> bool {
    let in_time = elapsed.as_secs_f64() < budget_s;
    let ok = pass && in_time;
    let line = format!(
        "[{}] criterion {n:>2} {name}: {detail} ({:.1} s of {budget_s} s)\n",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    ok
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_entmux")
}

fn opts() -> RunOptions {
    RunOptions::default()
}

// Reference pairing table with dashes normalized to ASCII.
const PAIR_ROWS: [&str; 15] = [
    "Signal 14 - Idler 14\tC19 - C49\t1562.23 - 1538.19",
    "Signal 13 - Idler 13\tC20 - C48\t1561.42 - 1538.98",
    "Signal 12 - Idler 12\tC21 - C47\t1560.61 - 1539.77",
    "Signal 11 - Idler 11\tC22 - C46\t1559.79 - 1540.56",
    "Signal 10 - Idler 10\tC23 - C45\t1558.98 - 1541.35",
    "Signal 9 - Idler 9\tC24 - C44\t1558.17 - 1542.14",
    "Signal 8 - Idler 8\tC25 - C43\t1557.36 - 1542.94",
    "Signal 7 - Idler 7\tC26 - C42\t1556.56 - 1543.73",
    "Signal 6 - Idler 6\tC27 - C41\t1555.75 - 1544.53",
    "Signal 5 - Idler 5\tC28 - C40\t1554.94 - 1545.32",
    "Signal 4 - Idler 4\tC29 - C39\t1554.13 - 1546.12",
    "Signal 3 - Idler 3\tC30 - C38\t1553.33 - 1546.92",
    "Signal 2 - Idler 2\tC31 - C37\t1552.52 - 1547.72",
    "Signal 1 - Idler 1\tC32 - C36\t1551.72 - 1548.52",
    "Pump\tC34\t1550.12",
];

#[test]
fn c01_grid_fidelity() {
    let _g = serial();
    let t = Instant::now();
    let out = Command::new(bin()).args(["budget", "--channels"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let matched = PAIR_ROWS.iter().filter(|row| lines.contains(row)).count();
    let grid = ChannelGrid::default();
    let pump = grid.channel(DEFAULT_PUMP_CHANNEL).unwrap();
    let pairs = grid.pairs(pump);
    let conserving = pairs.iter().filter(|p| energy_conservation_check(p, pump)).count();
    let pass = out.status.success() && matched == 15 && pairs.len() == 14 && conserving == 14;
    let detail = format!("{matched}/15 rows match, {conserving}/{} pairs conserve energy", pairs.len());
    assert!(report(1, "grid fidelity", pass, t.elapsed(), 1.0, &detail));
}

#[test]
fn c02_loss_ledger() {
    let _g = serial();
    let t = Instant::now();
    let cfg = ExperimentConfig::default();
    let totals: Vec<f64> = (0..3).map(|p| cfg.ledger(p).unwrap().total_db()).collect();
    let pass = totals == [15.7, 18.2, 18.2];
    let detail = format!("T1 {} dB, T2 {} dB, T3 {} dB", totals[0], totals[1], totals[2]);
    assert!(report(2, "loss ledger", pass, t.elapsed(), 1.0, &detail));
}

/// Noise-free, lossless single-slot source emitting one pair per pulse.
fn ideal_config(pulses: f64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.n_slots = 1;
    cfg.pump_phase = vec![0.0];
    cfg.v_cap = 1.0;
    cfg.pair_statistics = PairStatistics::Single;
    cfg.mu = 1.0;
    cfg.raman_singles_rate = 0.0;
    cfg.dark_rate_hz = 0.0;
    cfg.detector_jitter_sigma_ps = 0.0;
    for path in ["T1", "T2", "T3"] {
        cfg.losses.insert(path.into(), LossLedger::new());
    }
    cfg.duration_s = pulses / (cfg.rep_rate_mhz * 1e6);
    cfg.rng_seed = 2024;
    cfg
}

struct IdealSweep {
    target: SweepTarget,
    pulses: u64,
    /// (phase, central-central coincidences)
    points: Vec<(f64, f64)>,
}

fn ideal_sweeps() -> &'static (Vec<IdealSweep>, Duration) {
    static CELL: OnceLock<(Vec<IdealSweep>, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let t = Instant::now();
        let cfg = ideal_config(1e6);
        let sweeps = [(SweepTarget::Pump, TAU), (SweepTarget::Signal, 2.0 * TAU)]
            .into_iter()
            .map(|(target, stop)| {
                let sweep = PhaseSweep {
                    target,
                    start: 0.0,
                    stop,
                    points: 41,
                };
                let pts = run_fringe_experiment(&cfg, &sweep, opts()).unwrap();
                IdealSweep {
                    target,
                    pulses: pts[0].summary.pulses,
                    points: pts
                        .iter()
                        .map(|p| (p.phase, p.summary.slots[0].coincidences as f64))
                        .collect(),
                }
            })
            .collect();
        (sweeps, t.elapsed())
    })
}

#[test]
fn c03_fringe_law() {
    let _g = serial();
    let (sweeps, sweep_time) = ideal_sweeps();
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for s in sweeps {
        let fit = fit_fringe(&s.points, None).unwrap();
        let want = if s.target == SweepTarget::Pump { PI } else { TAU };
        let ratio = fit.period / want;
        pass &= (ratio - 1.0).abs() <= 0.01 && fit.visibility >= 0.999;
        parts.push(format!(
            "{} period {:.4} x {}, V {:.5}",
            s.target.name(),
            ratio,
            if s.target == SweepTarget::Pump { "pi" } else { "2pi" },
            fit.visibility
        ));
    }
    assert!(report(3, "fringe law", pass, t.elapsed() + *sweep_time, 60.0, &parts.join("; ")));
}

#[test]
fn c04_oracle_equivalence() {
    let _g = serial();
    let (sweeps, sweep_time) = ideal_sweeps();
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for s in sweeps {
        for &(x, got) in &s.points {
            let (pp, ps) = match s.target {
                SweepTarget::Pump => (x, 0.0),
                _ => (0.0, x),
            };
            // closed form, written out independently of the library
            let p_cc = (1.0 - (2.0 * pp - ps).cos()) / 16.0;
            assert!((p_cc - analytic_fringe(pp, ps, 0.0, 1.0).unwrap()).abs() < 1e-15);
            let expect = s.pulses as f64 * p_cc;
            let z = (got - expect).abs() / expect.max(1.0).sqrt();
            worst = worst.max(z);
            points += 1;
        }
    }
    let mut rng = StdRng::seed_from_u64(99);
    let mut max_err: f64 = 0.0;
    for _ in 0..1000 {
        let (pp, ps, pi) = (rng.gen_range(-TAU..TAU), rng.gen_range(-TAU..TAU), rng.gen_range(-TAU..TAU));
        let state = pair_state_from_pump(&pump_after_umi(pp).unwrap()).unwrap();
        let dist = analyzer_transform(&state, ps, pi, 1.0).unwrap();
        let paths = brute_force_full_table(pp, ps, pi).unwrap();
        for (s, row) in paths.iter().enumerate() {
            for (i, p) in row.iter().enumerate() {
                max_err = max_err.max((dist.get(Outcome::from_index(s), Outcome::from_index(i)) - p).abs());
            }
        }
    }
    let pass = worst <= 3.0 && max_err <= 1e-12;
    let detail = format!("max deviation {worst:.2} sigma over {points} points; path sum vs transform {max_err:.1e}");
    assert!(report(4, "oracle equivalence", pass, t.elapsed() + *sweep_time, 60.0, &detail));
}

struct MeasuredFringe {
    raw: Vec<f64>,
    subtracted: Vec<f64>,
    car: f64,
    elapsed: Duration,
}

fn measured_fringe() -> &'static MeasuredFringe {
    static CELL: OnceLock<MeasuredFringe> = OnceLock::new();
    CELL.get_or_init(|| {
        let t = Instant::now();
        let mut cfg = ExperimentConfig::default();
        cfg.duration_s = 200.0;
        cfg.rng_seed = 515;
        let sweep = PhaseSweep {
            target: SweepTarget::Pump,
            start: 0.0,
            stop: TAU,
            points: 21,
        };
        let pts = run_fringe_experiment(&cfg, &sweep, opts()).unwrap();
        let (mut raw, mut subtracted) = (Vec::new(), Vec::new());
        for slot in 0..cfg.n_slots {
            let triples: Vec<(f64, f64, f64)> = pts
                .iter()
                .map(|p| {
                    let c = &p.summary.slots[slot];
                    (p.phase, c.coincidences as f64, c.accidentals as f64)
                })
                .collect();
            let xy: Vec<(f64, f64)> = triples.iter().map(|&(x, c, _)| (x, c)).collect();
            raw.push(fit_fringe(&xy, Some(PI)).unwrap().visibility);
            subtracted.push(fit_fringe(&subtract_accidentals(&triples), Some(PI)).unwrap().visibility);
        }
        let mut hom_point = ExperimentConfig::default();
        hom_point.mu = 0.137;
        let car = analytic_car(&OracleParams::for_car(&hom_point, 0).unwrap()).unwrap();
        MeasuredFringe {
            raw,
            subtracted,
            car,
            elapsed: t.elapsed(),
        }
    })
}

#[test]
fn c05_full_loss_visibility() {
    let _g = serial();
    let f = measured_fringe();
    let pass = f.raw.iter().all(|v| *v > 0.90) && f.subtracted.iter().all(|v| *v > 0.95);
    let detail = format!(
        "S8-I8 raw {:.3}/{:.3}/{:.3}, subtracted {:.3}/{:.3}/{:.3}; noise calibrated to CAR {:.2}",
        f.raw[0], f.raw[1], f.raw[2], f.subtracted[0], f.subtracted[1], f.subtracted[2], f.car
    );
    assert!(report(5, "full-loss visibility", pass, f.elapsed, 300.0, &detail));
}

#[test]
fn c06_chsh_gate() {
    let _g = serial();
    let t = Instant::now();
    let at_bound = chsh_violation(FRAC_1_SQRT_2).unwrap();
    let above = chsh_violation(0.708).unwrap();
    let gate_time = t.elapsed();
    let f = measured_fringe();
    let all_violate = f.raw.iter().all(|v| chsh_violation(*v).unwrap());
    let pass = !at_bound && above && all_violate;
    let detail = format!("1/sqrt2 -> {at_bound}, 0.708 -> {above}, measured fringes violate: {all_violate}");
    assert!(report(6, "CHSH gate", pass, gate_time, 1.0, &detail));
}

fn hom_levels(cfg: &ExperimentConfig) -> (f64, Option<f64>) {
    let hom = cfg.hom.clone().unwrap();
    let pts = run_hom_experiment(cfg, &hom.delays_ps, opts()).unwrap();
    let triples: Vec<(f64, f64, f64)> = pts
        .iter()
        .map(|p| (p.delay_ps, p.fourfold as f64, p.dark_fourfold as f64))
        .collect();
    let (dip, base, dark) = hom_scan_levels(&triples, 4.0 * cfg.coherence_sigma_ps).unwrap();
    let v = hom_visibility(dip, base, Some(dark)).unwrap();
    (v.raw, v.net)
}

#[test]
fn c07_hom_dip() {
    let _g = serial();
    let t = Instant::now();
    let delays = vec![-30.0, -8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0, 30.0];

    let mut ideal = ideal_config(2e5);
    ideal.n_slots = 3;
    ideal.pump_phase = vec![0.0; 3];
    ideal.mu = 0.5;
    ideal.hom = Some(HomSettings {
        slots: (0, 1),
        delays_ps: delays.clone(),
    });
    let (_, ideal_net) = hom_levels(&ideal);
    let ideal_net = ideal_net.unwrap_or(f64::NAN);

    // CAR-8 operating point, 3 dB per path so fourfolds accumulate quickly
    let mut cfg = ExperimentConfig::default();
    cfg.mu = 0.137;
    cfg.duration_s = 0.2;
    cfg.rng_seed = 77;
    for path in ["T1", "T2", "T3"] {
        cfg.losses.insert(path.into(), LossLedger::parse("path 3.0").unwrap());
    }
    cfg.hom = Some(HomSettings {
        slots: (0, 1),
        delays_ps: delays,
    });
    let (raw, net) = hom_levels(&cfg);
    let net = net.unwrap_or(f64::NAN);

    let mut full_loss = ExperimentConfig::default();
    full_loss.mu = 0.137;
    full_loss.hom = cfg.hom.clone();
    let at_full_loss = analytic_hom(0.0, &HomParams::from_config(&full_loss).unwrap()).unwrap();

    let pass = ideal_net > 0.99 && (0.40..=0.75).contains(&raw) && net > raw;
    let detail = format!(
        "ideal net {ideal_net:.4}; operating point raw {raw:.3}, net {net:.3}; oracle at full loss raw {:.3}, net {:.3}",
        at_full_loss.raw_visibility, at_full_loss.net_visibility
    );
    assert!(report(7, "HOM dip", pass, t.elapsed(), 300.0, &detail));
}

fn poisson_stream(rng: &mut StdRng, rate_hz: f64, n: usize) -> Vec<i64> {
    let mean_gap_ps = 1e12 / rate_hz;
    let mut t = 0.0;
    (0..n)
        .map(|_| {
            t += -mean_gap_ps * (1.0 - rng.gen::<f64>()).ln();
            t.round() as i64
        })
        .collect()
}

#[test]
fn c08_counting_statistics() {
    let _g = serial();
    let t = Instant::now();

    let mut rng = StdRng::seed_from_u64(8);
    let (rate, n, window) = (1e6, 1_000_000, 1000);
    let a = poisson_stream(&mut rng, rate, n);
    let b = poisson_stream(&mut rng, rate, n);
    let span_s = (*a.last().unwrap()).min(*b.last().unwrap()) as f64 * 1e-12;
    let (_, acc) = coincidence_count(&a, &b, window, 35_753).unwrap();
    let expect = poisson_accidentals(rate, rate, span_s, window);
    let acc_z = (acc as f64 - expect).abs() / expect.sqrt();

    let mut cfg = ExperimentConfig::default();
    cfg.duration_s = 2.0;
    cfg.rng_seed = 88;
    let mut cars = Vec::new();
    let mut worst: f64 = 0.0;
    for mu in [0.02, 0.035, 0.06, 0.11, 0.2] {
        cfg.mu = mu;
        let s = run_car_experiment(&cfg, opts()).unwrap();
        let (c, a) = (s.slots[0].coincidences as f64, s.slots[0].accidentals as f64);
        let car = compute_car(c, a).unwrap();
        let oracle = analytic_car(&OracleParams::for_car(&cfg, 0).unwrap()).unwrap();
        worst = worst.max((car - oracle).abs() / car_uncertainty(c, a).unwrap());
        cars.push(car);
    }
    let decreasing = cars.windows(2).all(|w| w[1] < w[0]);
    let pass = acc_z <= 3.0 && decreasing && worst <= 3.0;
    let detail = format!(
        "accidentals {acc} vs {expect:.0} ({acc_z:.2} sigma); CAR {} over mu 0.02..0.2; worst MC-oracle {worst:.2} sigma",
        cars.iter().map(|c| format!("{c:.2}")).collect::<Vec<_>>().join(" > ")
    );
    assert!(report(8, "counting statistics", pass, t.elapsed(), 120.0, &detail));
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn c09_determinism() {
    let _g = serial();
    let t = Instant::now();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let tmp = tempfile::tempdir().unwrap();
    let runs: [(&str, &str, &[&str]); 3] = [
        ("fringe", "ideal.conf", &[]),
        ("hom", "ideal.conf", &[]),
        ("car-scan", "car_scan.conf", &["--duration", "0.2"]),
    ];
    let mut compared = 0;
    let mut pass = true;
    for (cmd, conf, extra) in runs {
        let mut outputs = Vec::new();
        for workers in ["1", "3"] {
            let out = tmp.path().join(format!("{cmd}-{workers}"));
            let status = Command::new(bin())
                .arg(cmd)
                .arg("--config")
                .arg(configs.join(conf))
                .args(["--seed", "4242", "--workers", workers, "--out"])
                .arg(&out)
                .args(extra)
                .output()
                .unwrap()
                .status;
            pass &= status.success();
            outputs.push(csv_bytes(&out));
        }
        pass &= !outputs[0].is_empty() && outputs[0] == outputs[1];
        compared += outputs[0].len();
    }
    let detail = format!("{compared} CSV files byte-identical across --workers 1 and 3");
    assert!(report(9, "determinism", pass, t.elapsed(), 120.0, &detail));
}

#[test]
fn c10_slot_isolation() {
    let _g = serial();
    let t = Instant::now();
    let mut cfg = ExperimentConfig::default();
    cfg.mu = 0.137;
    cfg.raman_singles_rate = 0.0;
    cfg.dark_rate_hz = 0.0;
    for path in ["T1", "T2", "T3"] {
        cfg.losses.insert(path.into(), LossLedger::new());
    }
    cfg.duration_s = 1e7 / (cfg.rep_rate_mhz * 1e6);
    cfg.rng_seed = 10;
    let ideal = simulate_car_run(&cfg, cfg.rng_seed, opts()).unwrap();
    let cross = cross_slot_coincidences(&ideal, cfg.n_slots, cfg.coincidence_window_ps);

    cfg.switch_extinction_db = 20.0;
    cfg.duration_s /= 10.0;
    let leaky = simulate_car_run(&cfg, cfg.rng_seed + 1, opts()).unwrap();
    let n = leaky.routing.routed as f64;
    let frac = leaky.routing.leak_fraction();
    let sigma = (0.01 * 0.99 / n).sqrt();
    let pass = ideal.pulses == 10_000_000 && cross == 0 && (frac - 0.01).abs() <= 3.0 * sigma;
    let detail = format!(
        "{} pulses, {cross} cross-slot coincidences; 20 dB leak {frac:.5} (sigma {sigma:.1e}, {} photons)",
        ideal.pulses, n
    );
    assert!(report(10, "slot isolation", pass, t.elapsed(), 120.0, &detail));
}
