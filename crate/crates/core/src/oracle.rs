//! Closed-form and enumeration references for every simulated observable.
//!
//! Nothing here draws random numbers or calls the transform code in
//! [`crate::quantum`]; agreement with the Monte Carlo is therefore evidence
//! rather than a restatement.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use statrs::function::erf::erf;

use crate::config::{ExperimentConfig, PairStatistics};
use crate::error::{Error, Result};
use crate::ledger::ANALYZER_ELEMENT;

/// Central-central probability of the canonical pair after both
/// analyzers: `(1/16)(1 - v cos(2 phi_p - phi_s - phi_i))`.
pub fn analytic_fringe(phi_p: f64, phi_s: f64, phi_i: f64, v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange { name: "v", value: v });
    }
    for phi in [phi_p, phi_s, phi_i] {
        if !phi.is_finite() {
            return Err(Error::NonFinitePhase(phi));
        }
    }
    Ok((1.0 - v * (2.0 * phi_p - phi_s - phi_i).cos()) / 16.0)
}

/// Monitored-port arrival table (signal slot, idler slot) by explicit sum
/// over the eight paths: pump bin x signal arm x idler arm. Each arm
/// reaches the monitored port with amplitude 1/2. Interference moves
/// probability between the monitored and unmonitored ports, so the table
/// total is `3/16` plus the central-central entry.
pub fn brute_force_state_propagation(phi_p: f64, phi_s: f64, phi_i: f64) -> Result<[[f64; 3]; 3]> {
    let full = brute_force_full_table(phi_p, phi_s, phi_i)?;
    let mut table = [[0.0; 3]; 3];
    for s in 0..3 {
        for i in 0..3 {
            table[s][i] = full[s][i];
        }
    }
    Ok(table)
}

/// Same enumeration over both analyzer output ports (32 paths). Index 3
/// collects every slot of the unmonitored port; the table sums to one.
pub fn brute_force_full_table(phi_p: f64, phi_s: f64, phi_i: f64) -> Result<[[f64; 4]; 4]> {
    for phi in [phi_p, phi_s, phi_i] {
        if !phi.is_finite() {
            return Err(Error::NonFinitePhase(phi));
        }
    }
    // amplitudes by (signal port, signal slot, idler port, idler slot)
    let mut amp = [[[[Complex64::new(0.0, 0.0); 3]; 2]; 3]; 2];
    for pump_long in [false, true] {
        // |SS> - e^{2 i phi_p} |LL>, from two pump photons in the same bin
        let pair = if pump_long {
            -Complex64::from_polar(FRAC_1_SQRT_2, 2.0 * phi_p)
        } else {
            Complex64::new(FRAC_1_SQRT_2, 0.0)
        };
        let bin = pump_long as usize;
        for s_port in 0..2 {
            for s_long in [false, true] {
                for i_port in 0..2 {
                    for i_long in [false, true] {
                        let mut a = pair * 0.25;
                        if s_long {
                            a *= Complex64::from_polar(1.0, phi_s);
                            // the long arm leaves the second port with a sign flip
                            if s_port == 1 {
                                a = -a;
                            }
                        }
                        if i_long {
                            a *= Complex64::from_polar(1.0, phi_i);
                            if i_port == 1 {
                                a = -a;
                            }
                        }
                        amp[s_port][bin + s_long as usize][i_port][bin + i_long as usize] += a;
                    }
                }
            }
        }
    }
    let mut table = [[0.0; 4]; 4];
    for sp in 0..2 {
        for ss in 0..3 {
            for ip in 0..2 {
                for is in 0..3 {
                    let row = if sp == 0 { ss } else { 3 };
                    let col = if ip == 0 { is } else { 3 };
                    table[row][col] += amp[sp][ss][ip][is].norm_sqr();
                }
            }
        }
    }
    Ok(table)
}

/// `P(n >= 2 | n >= 1)` for the pair-number law.
pub fn epsilon_multi(stats: PairStatistics, mu: f64) -> f64 {
    if mu <= 0.0 {
        return 0.0;
    }
    match stats {
        PairStatistics::Thermal => mu / (1.0 + mu),
        PairStatistics::Poisson => {
            let p0 = (-mu).exp();
            let p1 = mu * p0;
            (1.0 - p0 - p1) / (1.0 - p0)
        }
        PairStatistics::Single => 0.0,
    }
}

/// `E[x1 * x^(n-1)]` over pulses with `n >= 1` pairs plus `P(n = 0)`:
/// the first pair contributes factor `x1`, every further pair `x`.
pub fn pair_generating_function(stats: PairStatistics, mu: f64, x1: f64, x: f64) -> f64 {
    if mu <= 0.0 {
        return 1.0;
    }
    match stats {
        PairStatistics::Thermal => {
            let q = mu / (1.0 + mu);
            (1.0 - q) + (1.0 - q) * q * x1 / (1.0 - q * x)
        }
        PairStatistics::Poisson => {
            // sum_{n>=1} mu^n x^(n-1) / n! = (e^{mu x} - 1) / x
            let tail = if x.abs() < 1e-8 {
                mu + mu * mu * x / 2.0
            } else {
                (mu * x).exp_m1() / x
            };
            (-mu).exp() * (1.0 + x1 * tail)
        }
        PairStatistics::Single => (1.0 - mu) + mu * x1,
    }
}

fn pmf(stats: PairStatistics, mu: f64, n: u32) -> f64 {
    if mu <= 0.0 {
        return (n == 0) as u8 as f64;
    }
    match stats {
        PairStatistics::Thermal => {
            let q = mu / (1.0 + mu);
            (1.0 - q) * q.powi(n as i32)
        }
        PairStatistics::Poisson => {
            let mut p = (-mu).exp();
            for k in 1..=n {
                p *= mu / k as f64;
            }
            p
        }
        PairStatistics::Single => match n {
            0 => 1.0 - mu,
            1 => mu,
            _ => 0.0,
        },
    }
}

/// Parameters of one signal/idler detector pair seen through one path.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleParams {
    pub stats: PairStatistics,
    pub mu: f64,
    pub eta_signal: f64,
    pub eta_idler: f64,
    /// Raman photons per sub-pulse per channel, before losses.
    pub raman_per_pulse: f64,
    pub dark_rate_hz: f64,
    pub window_ps: i64,
    pub jitter_sigma_ps: f64,
    pub pump_phase: f64,
    pub signal_phase: f64,
    pub idler_phase: f64,
    pub v_cap: f64,
    pub coherence_sigma_ps: f64,
    pub pulses: u64,
}

impl OracleParams {
    fn from_config(cfg: &ExperimentConfig, slot: usize, analyzers: bool) -> Result<Self> {
        let ledger = cfg.ledger(slot)?;
        let eta = if analyzers {
            ledger.transmittance()
        } else {
            ledger.without(ANALYZER_ELEMENT).transmittance()
        };
        Ok(OracleParams {
            stats: cfg.pair_statistics,
            mu: cfg.mu,
            eta_signal: eta,
            eta_idler: eta,
            raman_per_pulse: cfg.raman_rate_for_pair(cfg.channel_pair),
            dark_rate_hz: cfg.dark_rate_hz,
            window_ps: cfg.coincidence_window_ps,
            jitter_sigma_ps: cfg.detector_jitter_sigma_ps,
            pump_phase: cfg.pump_phase_for_slot(slot),
            signal_phase: cfg.signal_phase,
            idler_phase: cfg.idler_phase,
            v_cap: cfg.v_cap,
            coherence_sigma_ps: cfg.coherence_sigma_ps,
            pulses: cfg.pulses(),
        })
    }

    /// Path `slot` with analyzers installed.
    pub fn for_fringe(cfg: &ExperimentConfig, slot: usize) -> Result<Self> {
        Self::from_config(cfg, slot, true)
    }

    /// Path `slot` without analyzers.
    pub fn for_car(cfg: &ExperimentConfig, slot: usize) -> Result<Self> {
        Self::from_config(cfg, slot, false)
    }

    /// Fraction of a jittered click that stays inside its gate.
    fn containment(&self) -> f64 {
        if self.jitter_sigma_ps <= 0.0 {
            1.0
        } else {
            erf(self.window_ps as f64 / 2.0 / (self.jitter_sigma_ps * std::f64::consts::SQRT_2))
        }
    }

    /// Probability that two jittered clicks of one pair fall within the
    /// coincidence window of each other.
    fn pair_overlap(&self) -> f64 {
        if self.jitter_sigma_ps <= 0.0 {
            1.0
        } else {
            erf(self.window_ps as f64 / 2.0 / (2.0 * self.jitter_sigma_ps))
        }
    }

    /// Mean dark records per gate.
    fn dark_per_gate(&self) -> f64 {
        self.dark_rate_hz * self.window_ps as f64 * 1e-12
    }
}

/// Expected counts over a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedCounts {
    pub coincidences: f64,
    pub accidentals: f64,
    pub signal_gate_singles: f64,
    pub idler_gate_singles: f64,
}

impl ExpectedCounts {
    pub fn car(&self) -> Result<f64> {
        if self.accidentals <= 0.0 {
            return Err(Error::UndefinedCar {
                coincidences: self.coincidences,
            });
        }
        Ok(self.coincidences / self.accidentals)
    }
}

/// Per-pair probabilities of landing in the counted gate:
/// `[signal, idler, both]`.
type GateLaw = [f64; 3];

fn gate_counts(p: &OracleParams, coherent: GateLaw, incoherent: GateLaw, noise_fraction: f64) -> ExpectedCounts {
    let (es, ei) = (p.eta_signal, p.eta_idler);
    let miss = |law: GateLaw| {
        (
            1.0 - es * law[0],
            1.0 - ei * law[1],
            1.0 - es * law[0] - ei * law[1] + es * ei * law[2],
        )
    };
    let (c_s, c_i, c_si) = miss(coherent);
    let (x_s, x_i, x_si) = miss(incoherent);
    let quiet_s = (-p.raman_per_pulse * es * noise_fraction).exp();
    let quiet_i = (-p.raman_per_pulse * ei * noise_fraction).exp();

    let none_s = pair_generating_function(p.stats, p.mu, c_s, x_s) * quiet_s;
    let none_i = pair_generating_function(p.stats, p.mu, c_i, x_i) * quiet_i;
    let none_both = pair_generating_function(p.stats, p.mu, c_si, x_si) * quiet_s * quiet_i;
    let click_s = 1.0 - none_s;
    let click_i = 1.0 - none_i;
    let click_both = 1.0 - none_s - none_i + none_both;

    let g = p.containment();
    let d = p.dark_per_gate();
    let n = p.pulses as f64;
    // photon-dark pairs always fall inside the window; two darks uniform
    // over one window do so with probability 3/4
    let cross = g * click_s * d + g * click_i * d + 0.75 * d * d;
    let coinc = g * g * p.pair_overlap() * click_both + cross;
    let acc = g * g * click_s * click_i + cross;
    ExpectedCounts {
        coincidences: n * coinc,
        accidentals: (n - 1.0).max(0.0) * acc,
        signal_gate_singles: n * (g * click_s + d),
        idler_gate_singles: n * (g * click_i + d),
    }
}

/// Expected central-central coincidences and accidentals of one path with
/// analyzers installed.
pub fn expected_fringe_counts(p: &OracleParams) -> Result<ExpectedCounts> {
    let cc = brute_force_state_propagation(p.pump_phase, p.signal_phase, p.idler_phase)?[1][1];
    let incoherent = analytic_fringe(p.pump_phase, p.signal_phase, p.idler_phase, 0.0)?;
    let coherent = incoherent + p.v_cap * (cc - incoherent);
    // a photon reaches the monitored central slot with probability 1/4
    Ok(gate_counts(p, [0.25, 0.25, coherent], [0.25, 0.25, incoherent], 0.25))
}

/// Raw fringe visibility expected from coincidence counts at the fringe
/// extremes, and the accidental-subtracted value.
pub fn expected_fringe_visibility(p: &OracleParams) -> Result<(f64, f64)> {
    let at = |theta: f64| {
        let mut q = p.clone();
        q.pump_phase = theta / 2.0;
        q.signal_phase = 0.0;
        q.idler_phase = 0.0;
        expected_fringe_counts(&q)
    };
    let lo = at(0.0)?;
    let hi = at(std::f64::consts::PI)?;
    let raw = (hi.coincidences - lo.coincidences) / (hi.coincidences + lo.coincidences);
    let (hs, ls) = (hi.coincidences - hi.accidentals, lo.coincidences - lo.accidentals);
    // clamped like the fitted value; with at most one pair per pulse the
    // cross-pulse accidentals over-subtract
    Ok((raw, ((hs - ls) / (hs + ls)).clamp(0.0, 1.0)))
}

/// Expected coincidences and accidentals without analyzers.
pub fn expected_car_counts(p: &OracleParams) -> ExpectedCounts {
    gate_counts(p, [1.0; 3], [1.0; 3], 1.0)
}

/// Coincidence-to-accidental ratio without analyzers, including
/// multi-pair, Raman and dark contributions.
pub fn analytic_car(p: &OracleParams) -> Result<f64> {
    expected_car_counts(p).car()
}

/// Expected accidental coincidences of two uncorrelated Poisson streams
/// counted with inclusive window `|dt| <= window/2` on a 1 ps grid.
pub fn poisson_accidentals(rate_a_hz: f64, rate_b_hz: f64, duration_s: f64, window_ps: i64) -> f64 {
    rate_a_hz * rate_b_hz * duration_s * ((window_ps / 2) * 2 + 1) as f64 * 1e-12
}

/// Two heralded sources interfering at a balanced coupler.
#[derive(Debug, Clone, PartialEq)]
pub struct HomParams {
    pub stats: PairStatistics,
    pub mu: f64,
    /// Signal (herald) transmittance per arm.
    pub eta_herald: [f64; 2],
    /// Idler transmittance to and through the coupler per arm.
    pub eta_idler: [f64; 2],
    pub raman_per_pulse: f64,
    pub dark_rate_hz: f64,
    pub window_ps: i64,
    pub jitter_sigma_ps: f64,
    pub coherence_sigma_ps: f64,
    pub pulses: u64,
}

impl HomParams {
    /// Arms are the configured HOM slots, without analyzers.
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let hom = cfg
            .hom
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("HOM prediction needs hom.slots".into()))?;
        let eta = |slot: usize| -> Result<f64> { Ok(cfg.ledger(slot)?.without(ANALYZER_ELEMENT).transmittance()) };
        let (a, b) = hom.slots;
        Ok(HomParams {
            stats: cfg.pair_statistics,
            mu: cfg.mu,
            eta_herald: [eta(a)?, eta(b)?],
            eta_idler: [eta(a)?, eta(b)?],
            raman_per_pulse: cfg.raman_rate_for_pair(cfg.channel_pair),
            dark_rate_hz: cfg.dark_rate_hz,
            window_ps: cfg.coincidence_window_ps,
            jitter_sigma_ps: cfg.detector_jitter_sigma_ps,
            coherence_sigma_ps: cfg.coherence_sigma_ps,
            pulses: cfg.pulses(),
        })
    }
}

/// Predicted HOM fourfold counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomPrediction {
    pub fourfold: f64,
    /// Distinguishable-photon level (delay far outside the coherence time).
    pub baseline: f64,
    /// Sum of the two blocked-arm fourfold counts.
    pub dark_fourfold: f64,
    pub raw_visibility: f64,
    pub net_visibility: f64,
}

/// Per-arm law of (herald gate occupied, photons reaching the coupler).
struct ArmLaw {
    /// `P(herald, t photons)` for t = 0, 1, ...
    by_total: Vec<f64>,
    /// `P(herald, exactly one paired idler and no Raman idler)`.
    single_pair: f64,
    herald: f64,
}

fn binomial(n: u32, k: u32, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut c = 1.0;
    for j in 0..k {
        c *= (n - j) as f64 / (j + 1) as f64;
    }
    c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

fn arm_law(hp: &HomParams, arm: usize, g: f64, d: f64) -> ArmLaw {
    let (eh, ec) = (hp.eta_herald[arm], hp.eta_idler[arm]);
    let mut n_max = 1u32;
    while (n_max as f64) < hp.mu + 1.0 || pmf(hp.stats, hp.mu, n_max) > 1e-18 {
        n_max += 1;
    }
    let raman_h = (-hp.raman_per_pulse * eh).exp();
    let occupied = |photon_absent: f64| 1.0 - (1.0 - g * (1.0 - photon_absent)) * (-d).exp();
    // paired idlers at the coupler, jointly with the herald
    let mut paired = vec![0.0; n_max as usize + 1];
    for n in 0..=n_max {
        let herald = occupied((1.0 - eh).powi(n as i32) * raman_h);
        let pn = pmf(hp.stats, hp.mu, n);
        for (k, slot) in paired.iter_mut().enumerate().take(n as usize + 1) {
            *slot += pn * herald * binomial(n, k as u32, ec);
        }
    }
    let lambda = hp.raman_per_pulse * ec;
    let j_max = 1 + (lambda * 10.0 + 10.0) as usize;
    let raman: Vec<f64> = (0..=j_max)
        .scan((-lambda).exp(), |p, j| {
            let out = *p;
            *p *= lambda / (j + 1) as f64;
            Some(out)
        })
        .collect();
    let mut by_total = vec![0.0; paired.len() + raman.len()];
    for (k, pk) in paired.iter().enumerate() {
        for (j, pj) in raman.iter().enumerate() {
            by_total[k + j] += pk * pj;
        }
    }
    ArmLaw {
        single_pair: paired.get(1).copied().unwrap_or(0.0) * raman[0],
        herald: paired.iter().sum(),
        by_total,
    }
}

/// Fourfold probability per pulse for coupler mode overlap `m`.
fn fourfold_per_pulse(hp: &HomParams, m: f64, blocked: Option<usize>) -> f64 {
    let g = if hp.jitter_sigma_ps <= 0.0 {
        1.0
    } else {
        erf(hp.window_ps as f64 / 2.0 / (hp.jitter_sigma_ps * std::f64::consts::SQRT_2))
    };
    let d = hp.dark_rate_hz * hp.window_ps as f64 * 1e-12;
    let lit = 1.0 - (1.0 - g) * (-d).exp();
    let dark = 1.0 - (-d).exp();
    // both coupler outputs occupied given m distinguishable photons
    let both = |m: usize| -> f64 {
        if m == 0 {
            return dark * dark;
        }
        let none = 0.5f64.powi(m as i32);
        let one_side = none; // all photons at one named output
        let split = 1.0 - 2.0 * one_side;
        split * lit * lit + 2.0 * one_side * lit * dark
    };
    let arms: Vec<ArmLaw> = (0..2).map(|a| arm_law(hp, a, g, d)).collect();
    let totals = |a: usize| -> Vec<f64> {
        if blocked == Some(a) {
            vec![arms[a].herald]
        } else {
            arms[a].by_total.clone()
        }
    };
    let (ta, tb) = (totals(0), totals(1));
    let mut p = 0.0;
    for (i, pa) in ta.iter().enumerate() {
        for (j, pb) in tb.iter().enumerate() {
            p += pa * pb * both(i + j);
        }
    }
    if blocked.is_none() {
        let split = (1.0 - m) / 2.0;
        let hom = split * lit * lit + (1.0 - split) * lit * dark;
        p += arms[0].single_pair * arms[1].single_pair * (hom - both(2));
    }
    p
}

/// Expected fourfold counts at coupler delay `delay_ps` with raw and
/// dark-subtracted visibility of the dip.
pub fn analytic_hom(delay_ps: f64, hp: &HomParams) -> Result<HomPrediction> {
    if !delay_ps.is_finite() {
        return Err(Error::OutOfRange {
            name: "delay_ps",
            value: delay_ps,
        });
    }
    if !(hp.coherence_sigma_ps > 0.0) {
        return Err(Error::OutOfRange {
            name: "coherence_sigma_ps",
            value: hp.coherence_sigma_ps,
        });
    }
    let s = hp.coherence_sigma_ps;
    let m = (-delay_ps * delay_ps / (4.0 * s * s)).exp();
    let n = hp.pulses as f64;
    let fourfold = n * fourfold_per_pulse(hp, m, None);
    let baseline = n * fourfold_per_pulse(hp, 0.0, None);
    let dark = n * (fourfold_per_pulse(hp, 0.0, Some(0)) + fourfold_per_pulse(hp, 0.0, Some(1)));
    let raw = if baseline > 0.0 { (baseline - fourfold) / baseline } else { 0.0 };
    let net = if baseline > dark {
        (baseline - fourfold) / (baseline - dark)
    } else {
        0.0
    };
    Ok(HomPrediction {
        fourfold,
        baseline,
        dark_fourfold: dark,
        raw_visibility: raw,
        net_visibility: net,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn fringe_values() {
        assert_eq!(analytic_fringe(0.0, 0.0, 0.0, 1.0).unwrap(), 0.0);
        assert!((analytic_fringe(PI / 2.0, 0.0, 0.0, 1.0).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(analytic_fringe(1.3, 0.2, -4.0, 0.0).unwrap(), 1.0 / 16.0);
        assert!(analytic_fringe(0.0, 0.0, 0.0, 1.5).is_err());
    }

    #[test]
    fn brute_force_tables() {
        let t = brute_force_state_propagation(0.0, 0.0, 0.0).unwrap();
        assert!(t[1][1].abs() < 1e-15);
        for (p, s, i) in [(0.0, 0.0, 0.0), (0.4, 1.1, -2.0), (3.0, 0.5, 0.25)] {
            let t = brute_force_state_propagation(p, s, i).unwrap();
            let total: f64 = t.iter().flatten().sum();
            assert!((total - 3.0 / 16.0 - t[1][1]).abs() < 1e-12);
            let full: f64 = brute_force_full_table(p, s, i).unwrap().iter().flatten().sum();
            assert!((full - 1.0).abs() < 1e-12);
            for (a, b) in [(0, 0), (2, 2)] {
                assert!((t[a][b] - 1.0 / 32.0).abs() < 1e-15);
            }
            for (a, b) in [(0, 2), (2, 0)] {
                assert_eq!(t[a][b], 0.0);
            }
            assert!((t[1][1] - analytic_fringe(p, s, i, 1.0).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn generating_function_limits() {
        for stats in [PairStatistics::Thermal, PairStatistics::Poisson, PairStatistics::Single] {
            let mu = 0.3;
            assert!((pair_generating_function(stats, mu, 1.0, 1.0) - 1.0).abs() < 1e-12);
            let p0 = pmf(stats, mu, 0);
            assert!((pair_generating_function(stats, mu, 0.0, 0.5) - p0).abs() < 1e-12);
            let direct: f64 = (1..200).map(|n| pmf(stats, mu, n) * 0.7 * 0.4f64.powi(n as i32 - 1)).sum();
            assert!((pair_generating_function(stats, mu, 0.7, 0.4) - p0 - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn epsilon_values() {
        assert!((epsilon_multi(PairStatistics::Thermal, 0.25) - 0.2).abs() < 1e-15);
        assert_eq!(epsilon_multi(PairStatistics::Single, 0.5), 0.0);
        assert_eq!(epsilon_multi(PairStatistics::Thermal, 0.0), 0.0);
    }

    fn clean_car(mu: f64) -> OracleParams {
        OracleParams {
            stats: PairStatistics::Thermal,
            mu,
            eta_signal: 0.1,
            eta_idler: 0.1,
            raman_per_pulse: 0.0,
            dark_rate_hz: 0.0,
            window_ps: 1000,
            jitter_sigma_ps: 0.0,
            pump_phase: 0.0,
            signal_phase: 0.0,
            idler_phase: 0.0,
            v_cap: 1.0,
            coherence_sigma_ps: 1.874,
            pulses: 1_000_000,
        }
    }

    #[test]
    fn car_limits() {
        // noise-free: CAR - 1 tends to 1/mu for a thermal source
        let a = analytic_car(&clean_car(1e-3)).unwrap();
        let b = analytic_car(&clean_car(2e-3)).unwrap();
        assert!(a > 900.0);
        assert!(((a - 1.0) / (b - 1.0) - 2.0).abs() < 0.01);
        assert!(matches!(analytic_car(&clean_car(0.0)), Err(Error::UndefinedCar { .. })));
    }

    fn ideal_hom() -> HomParams {
        HomParams {
            stats: PairStatistics::Single,
            mu: 0.5,
            eta_herald: [1.0, 1.0],
            eta_idler: [1.0, 1.0],
            raman_per_pulse: 0.0,
            dark_rate_hz: 0.0,
            window_ps: 1000,
            jitter_sigma_ps: 0.0,
            coherence_sigma_ps: 1.874,
            pulses: 1000,
        }
    }

    #[test]
    fn hom_ideal_and_overlap() {
        let hp = ideal_hom();
        let p = analytic_hom(0.0, &hp).unwrap();
        assert!(p.fourfold.abs() < 1e-12);
        assert!((p.raw_visibility - 1.0).abs() < 1e-12);
        // single pairs per arm: baseline = mu^2 / 2
        assert!((p.baseline - 1000.0 * 0.125).abs() < 1e-9);
        let s = hp.coherence_sigma_ps;
        let q = analytic_hom(2.0 * s, &hp).unwrap();
        assert!((q.raw_visibility - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn hom_multi_pair_degrades() {
        let mut hp = ideal_hom();
        hp.stats = PairStatistics::Thermal;
        hp.eta_herald = [0.3, 0.3];
        hp.eta_idler = [0.3, 0.3];
        let mut last = 1.0;
        for mu in [0.01, 0.05, 0.1, 0.2] {
            hp.mu = mu;
            let p = analytic_hom(0.0, &hp).unwrap();
            assert!(p.raw_visibility < last, "{mu}");
            assert!(p.net_visibility > p.raw_visibility);
            last = p.raw_visibility;
        }
    }
}
