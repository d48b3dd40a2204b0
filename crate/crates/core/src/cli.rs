//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 runtime error.

use std::ffi::OsString;
use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    car_uncertainty, chsh_violation, compute_car, fit_fringe, hom_scan_levels, hom_visibility, subtract_accidentals,
    visibility_uncertainty,
};
use crate::config::{linspace, ExperimentConfig, PhaseSweep, ScanTarget, SweepTarget};
use crate::error::{Error, Result};
use crate::grid::format_pair_table;
use crate::io::{
    write_car_csv, write_fringe_csv, write_hom_csv, write_results_csv, write_singles_csv, CarRow, FringeRow, HomRow,
    Plot, ResultRow,
};
use crate::oracle::{
    analytic_car, analytic_fringe, analytic_hom, brute_force_state_propagation, epsilon_multi,
    expected_fringe_visibility, HomParams, OracleParams,
};
use crate::sim::experiments::config_grid;
use crate::sim::{derive_seed, run_car_experiment, run_fringe_experiment, run_hom_experiment, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "entmux", version, about = "Multiplexed time-bin entanglement simulator")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// Experiment configuration file (built-in defaults when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Override the configured RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Override the configured integration time per run, seconds.
    #[arg(long, global = true)]
    duration: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Two-photon fringe sweep: CSV per path, SVG, results.csv.
    Fringe,
    /// Four-fold HOM dip between two time slots.
    Hom,
    /// Per-path loss budget.
    Budget {
        /// Also print the signal/idler channel pairing table.
        #[arg(long)]
        channels: bool,
    },
    /// Coincidence-to-accidental ratio over a mu or channel sweep.
    CarScan,
    /// Closed-form predictions for the configured experiment.
    Oracle,
    /// The wavelength grid and its channel pairs.
    Grid,
}

/// What one invocation was asked to do.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config_path: Option<PathBuf>,
    pub subcommand: String,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub workers: usize,
    pub duration_s: Option<f64>,
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("ENTMUX_LOG", "warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let manifest = RunManifest {
        config_path: cli.common.config.clone(),
        subcommand: command_name(&cli.command).to_string(),
        out_dir: cli.common.out.clone(),
        seed: cli.common.seed,
        workers: cli
            .common
            .workers
            .unwrap_or_else(|| RunOptions::default().workers)
            .max(1),
        duration_s: cli.common.duration,
    };
    match dispatch(&cli.command, &manifest) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("entmux {}: {e}", manifest.subcommand);
            if e.is_usage() {
                2
            } else {
                3
            }
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Fringe => "fringe",
        Command::Hom => "hom",
        Command::Budget { .. } => "budget",
        Command::CarScan => "car-scan",
        Command::Oracle => "oracle",
        Command::Grid => "grid",
    }
}

fn load_config(m: &RunManifest) -> Result<ExperimentConfig> {
    let mut cfg = match &m.config_path {
        Some(p) => ExperimentConfig::load(p).map_err(|e| match e {
            Error::Io(io) => Error::InvalidConfig(format!("{}: {io}", p.display())),
            other => other,
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = m.seed {
        cfg.rng_seed = s;
    }
    if let Some(d) = m.duration_s {
        cfg.duration_s = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(command: &Command, m: &RunManifest) -> Result<()> {
    let cfg = load_config(m)?;
    match command {
        Command::Fringe => cmd_fringe(&cfg, m),
        Command::Hom => cmd_hom(&cfg, m),
        Command::Budget { channels } => cmd_budget(&cfg, *channels),
        Command::CarScan => cmd_car_scan(&cfg, m),
        Command::Oracle => cmd_oracle(&cfg),
        Command::Grid => cmd_grid(&cfg),
    }
}

fn options(m: &RunManifest) -> RunOptions {
    RunOptions { workers: m.workers }
}

fn ensure_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn pair_label(cfg: &ExperimentConfig) -> String {
    format!("S{k}-I{k}", k = cfg.channel_pair)
}

/// Fringe period expected for the swept phase.
pub fn sweep_period(target: SweepTarget) -> f64 {
    match target {
        SweepTarget::Pump => PI,
        SweepTarget::Signal | SweepTarget::Idler => TAU,
    }
}

fn default_sweep() -> PhaseSweep {
    PhaseSweep {
        target: SweepTarget::Pump,
        start: 0.0,
        stop: TAU,
        points: 21,
    }
}

/// Visibility figures derived from one fringe table, exactly as written
/// to `results.csv`.
pub fn fringe_results(rows: &[FringeRow], target: SweepTarget, path: &str) -> Result<Vec<ResultRow>> {
    let period = sweep_period(target);
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.phase_rad, r.coincidences as f64)).collect();
    let fit = fit_fringe(&pts, Some(period))?;
    let v_err = visibility_uncertainty(&pts, period)?;
    let triples: Vec<(f64, f64, f64)> = rows
        .iter()
        .map(|r| (r.phase_rad, r.coincidences as f64, r.accidentals as f64))
        .collect();
    let sub_pts = subtract_accidentals(&triples);
    let sub = fit_fringe(&sub_pts, Some(period))?;
    let sub_err = visibility_uncertainty(&sub_pts, period)?;
    let mut out = vec![
        ResultRow::new(format!("visibility_{path}"), fit.visibility, v_err),
        ResultRow::new(format!("visibility_subtracted_{path}"), sub.visibility, sub_err),
        ResultRow::new(format!("phase_offset_{path}"), fit.phase_offset, 0.0),
        ResultRow::new(format!("chsh_{path}"), chsh_violation(fit.visibility)? as u8 as f64, 0.0),
    ];
    match fit_fringe(&pts, None) {
        Ok(free) => out.push(ResultRow::new(format!("period_{path}"), free.period, 0.0)),
        Err(e) => log::warn!("free-period fit for {path} failed: {e}"),
    }
    Ok(out)
}

fn cmd_fringe(cfg: &ExperimentConfig, m: &RunManifest) -> Result<()> {
    let sweep = cfg.sweep.clone().unwrap_or_else(|| {
        log::info!("no sweep configured, using a 21-point pump sweep");
        default_sweep()
    });
    if sweep.points < 5 {
        return Err(Error::InsufficientPoints {
            needed: 5,
            got: sweep.points,
        });
    }
    ensure_out(&m.out_dir)?;
    let points = run_fringe_experiment(cfg, &sweep, options(m))?;
    let label = pair_label(cfg);
    let mut results = Vec::new();
    for j in 0..cfg.n_slots {
        let path = format!("T{}", j + 1);
        let rows: Vec<FringeRow> = points
            .iter()
            .map(|p| FringeRow {
                phase_rad: p.phase,
                coincidences: p.summary.slots[j].coincidences,
                accidentals: p.summary.slots[j].accidentals,
                duration_s: p.summary.duration_s,
            })
            .collect();
        let stem = format!("fringe_{label}_{path}");
        write_fringe_csv(&m.out_dir.join(format!("{stem}.csv")), &rows)?;
        let res = fringe_results(&rows, sweep.target, &path)?;
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.phase_rad, r.coincidences as f64)).collect();
        let fit = fit_fringe(&pts, Some(sweep_period(sweep.target)))?;
        let curve: Vec<(f64, f64)> = linspace(sweep.start, sweep.stop, 200)
            .into_iter()
            .map(|x| (x, fit.eval(x)))
            .collect();
        Plot {
            title: &format!("{label} {path}: V = {:.4}", fit.visibility),
            x_label: &format!("{} phase (rad)", sweep.target.name()),
            y_label: "coincidences",
            points: &pts,
            curve: Some(&curve),
        }
        .write(&m.out_dir.join(format!("{stem}.svg")))?;
        println!(
            "{label} {path}: V = {:.4} (subtracted {:.4}), CHSH violated: {}",
            res[0].value,
            res[1].value,
            res[3].value == 1.0
        );
        results.extend(res);
    }
    let mut singles: Vec<(String, u64)> = points[0].summary.singles.iter().map(|(n, _)| (n.clone(), 0)).collect();
    for p in &points {
        for (acc, (_, c)) in singles.iter_mut().zip(&p.summary.singles) {
            acc.1 += c;
        }
    }
    write_singles_csv(&m.out_dir.join("singles.csv"), &singles)?;
    write_results_csv(&m.out_dir.join("results.csv"), &results)?;
    Ok(())
}

fn cmd_hom(cfg: &ExperimentConfig, m: &RunManifest) -> Result<()> {
    let hom = cfg
        .hom
        .clone()
        .ok_or_else(|| Error::InvalidConfig("hom needs `hom.slots = a, b` in the config".into()))?;
    ensure_out(&m.out_dir)?;
    let points = run_hom_experiment(cfg, &hom.delays_ps, options(m))?;
    let label = pair_label(cfg);
    let stem = format!("hom_{label}-T{}_{label}-T{}", hom.slots.0 + 1, hom.slots.1 + 1);
    let rows: Vec<HomRow> = points
        .iter()
        .map(|p| HomRow {
            delay_ps: p.delay_ps,
            fourfold: p.fourfold,
            dark_fourfold: p.dark_fourfold,
        })
        .collect();
    write_hom_csv(&m.out_dir.join(format!("{stem}.csv")), &rows)?;

    let hp = HomParams::from_config(cfg)?;
    let far = 4.0 * cfg.coherence_sigma_ps;
    let triples: Vec<(f64, f64, f64)> = rows
        .iter()
        .map(|r| (r.delay_ps, r.fourfold as f64, r.dark_fourfold as f64))
        .collect();
    let (dip, baseline, dark) = hom_scan_levels(&triples, far)?;
    let vis = hom_visibility(dip, baseline, Some(dark))?;
    let pred = analytic_hom(0.0, &hp)?;
    let mut results = vec![
        ResultRow::new("hom_raw_visibility", vis.raw, vis.raw_uncertainty),
        ResultRow::new("hom_raw_visibility_oracle", pred.raw_visibility, 0.0),
        ResultRow::new("hom_net_visibility_oracle", pred.net_visibility, 0.0),
    ];
    if let (Some(n), Some(e)) = (vis.net, vis.net_uncertainty) {
        results.insert(1, ResultRow::new("hom_net_visibility", n, e));
    }
    write_results_csv(&m.out_dir.join("results.csv"), &results)?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.delay_ps, r.fourfold as f64)).collect();
    let (lo, hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.0), h.max(p.0)));
    let curve: Vec<(f64, f64)> = linspace(lo, hi, 200)
        .into_iter()
        .map(|d| Ok((d, analytic_hom(d, &hp)?.fourfold)))
        .collect::<Result<_>>()?;
    Plot {
        title: &format!("HOM {label} T{} x T{}", hom.slots.0 + 1, hom.slots.1 + 1),
        x_label: "delay (ps)",
        y_label: "fourfold counts",
        points: &pts,
        curve: Some(&curve),
    }
    .write(&m.out_dir.join(format!("{stem}.svg")))?;
    println!(
        "HOM raw visibility {:.4} +- {:.4}, net {:.4} (oracle raw {:.4}, net {:.4})",
        vis.raw,
        vis.raw_uncertainty,
        vis.net.unwrap_or(f64::NAN),
        pred.raw_visibility,
        pred.net_visibility
    );
    Ok(())
}

fn cmd_budget(cfg: &ExperimentConfig, channels: bool) -> Result<()> {
    for (path, ledger) in &cfg.losses {
        println!("{path} {} dB\ttransmittance {:.6}\t[{ledger}]", ledger.total_db(), ledger.transmittance());
    }
    if channels {
        let grid = config_grid(cfg)?;
        print!("{}", format_pair_table(&grid, grid.channel(cfg.pump_channel)?)?);
    }
    Ok(())
}

fn cmd_car_scan(cfg: &ExperimentConfig, m: &RunManifest) -> Result<()> {
    let scan = cfg
        .scan
        .clone()
        .ok_or_else(|| Error::InvalidConfig("car-scan needs `scan.values` in the config".into()))?;
    ensure_out(&m.out_dir)?;
    let mut rows = Vec::new();
    for (idx, &v) in scan.values.iter().enumerate() {
        let mut c = cfg.clone();
        match scan.target {
            ScanTarget::Mu => c.mu = v,
            ScanTarget::Channel => c.channel_pair = v as usize,
        }
        c.rng_seed = derive_seed(cfg.rng_seed, idx as u64);
        c.validate()?;
        let summary = run_car_experiment(&c, options(m))?;
        let counts = &summary.slots[0];
        let car = match compute_car(counts.coincidences as f64, counts.accidentals as f64) {
            Ok(x) => x,
            Err(_) => {
                log::warn!("no accidentals at sweep value {v}; CAR unbounded");
                f64::INFINITY
            }
        };
        let car_oracle = analytic_car(&OracleParams::for_car(&c, 0)?).unwrap_or(f64::INFINITY);
        let err = car_uncertainty(counts.coincidences as f64, counts.accidentals as f64).unwrap_or(f64::NAN);
        println!("{v}\tCAR {car:.3} +- {err:.3}\toracle {car_oracle:.3}");
        rows.push(CarRow {
            sweep_value: v,
            car,
            car_oracle,
        });
    }
    write_car_csv(&m.out_dir.join("car_scan.csv"), &rows)?;
    Ok(())
}

fn cmd_oracle(cfg: &ExperimentConfig) -> Result<()> {
    println!("# central-central probability vs pump phase (signal, idler phases 0)");
    println!("phi_p\tanalytic\tpath_sum");
    for phi in linspace(0.0, PI, 9) {
        let a = analytic_fringe(phi, 0.0, 0.0, 1.0)?;
        let b = brute_force_state_propagation(phi, 0.0, 0.0)?[1][1];
        println!("{phi:.4}\t{a:.6}\t{b:.6}");
    }
    println!("# expected fringe visibility per path (raw, accidental-subtracted)");
    for j in 0..cfg.n_slots {
        let p = OracleParams::for_fringe(cfg, j)?;
        let (raw, sub) = expected_fringe_visibility(&p)?;
        println!("T{}\t{raw:.4}\t{sub:.4}", j + 1);
    }
    println!("# CAR without analyzers");
    for j in 0..cfg.n_slots {
        match analytic_car(&OracleParams::for_car(cfg, j)?) {
            Ok(c) => println!("T{}\t{c:.4}", j + 1),
            Err(_) => println!("T{}\tunbounded", j + 1),
        }
    }
    println!(
        "# multi-pair fraction P(n>=2 | n>=1) = {:.6}",
        epsilon_multi(cfg.pair_statistics, cfg.mu)
    );
    if cfg.hom.is_some() {
        let hp = HomParams::from_config(cfg)?;
        let p = analytic_hom(0.0, &hp)?;
        println!(
            "# HOM at zero delay: fourfold {:.4}, baseline {:.4}, dark {:.4}, raw V {:.4}, net V {:.4}",
            p.fourfold, p.baseline, p.dark_fourfold, p.raw_visibility, p.net_visibility
        );
    }
    Ok(())
}

fn cmd_grid(cfg: &ExperimentConfig) -> Result<()> {
    let grid = config_grid(cfg)?;
    println!("# channel\twavelength_nm ({} GHz grid)", grid.spacing_ghz());
    for (ch, wl) in grid.channels() {
        println!("{ch}\t{wl:.2}");
    }
    let pump = grid.channel(cfg.pump_channel)?;
    println!("# pairs around pump {pump}");
    for p in grid.pairs(pump) {
        println!(
            "{}\t{} - {}\t{:.2} - {:.2}",
            p.label(),
            p.signal,
            p.idler,
            p.signal_wavelength_nm,
            p.idler_wavelength_nm
        );
    }
    Ok(())
}
