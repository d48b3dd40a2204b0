//! Amplitude-level model of pulsed time-bin entanglement.
//!
//! A pump pulse passes an unbalanced interferometer and becomes a
//! superposition of a short-arm and a long-arm bin. Four-wave mixing
//! annihilates two pump photons from the same bin, so the biphoton inherits
//! the pump's bin structure with a doubled relative phase. Each photon is
//! then analyzed by its own unbalanced interferometer; the two paths into a
//! common arrival slot interfere.
//!
//! The analyzers are lossless two-port devices. Each path reaches the
//! monitored port with amplitude 1/2 and the unmonitored port with the
//! complementary amplitude, so an [`ArrivalDistribution`] always sums to one
//! once the unmonitored outcome is included.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-9;

/// Pump pulse after its preparation interferometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpBinState {
    pub amp_short: Complex64,
    pub amp_long: Complex64,
    pub phase: f64,
}

impl PumpBinState {
    pub fn norm_sqr(&self) -> f64 {
        self.amp_short.norm_sqr() + self.amp_long.norm_sqr()
    }
}

/// Prepares `(|S> - e^{i phi_p} |L>) / sqrt 2`.
pub fn pump_after_umi(phi_p: f64) -> Result<PumpBinState> {
    if !phi_p.is_finite() {
        return Err(Error::NonFinitePhase(phi_p));
    }
    Ok(PumpBinState {
        amp_short: Complex64::new(FRAC_1_SQRT_2, 0.0),
        amp_long: -Complex64::from_polar(FRAC_1_SQRT_2, phi_p),
        phase: phi_p,
    })
}

/// Joint emission-bin amplitudes of a signal/idler pair.
///
/// `amp_sl` and `amp_ls` are zero for pairs made by four-wave mixing; they
/// are kept so the analyzer map is defined on the whole two-bin space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBinAmplitudes {
    pub amp_ss: Complex64,
    pub amp_ll: Complex64,
    pub amp_sl: Complex64,
    pub amp_ls: Complex64,
}

impl TimeBinAmplitudes {
    pub fn norm_sqr(&self) -> f64 {
        self.amp_ss.norm_sqr() + self.amp_ll.norm_sqr() + self.amp_sl.norm_sqr() + self.amp_ls.norm_sqr()
    }

    /// Amplitude indexed by (signal bin, idler bin), 0 = short, 1 = long.
    pub fn get(&self, signal_bin: usize, idler_bin: usize) -> Complex64 {
        match (signal_bin, idler_bin) {
            (0, 0) => self.amp_ss,
            (0, 1) => self.amp_sl,
            (1, 0) => self.amp_ls,
            _ => self.amp_ll,
        }
    }
}

/// Biphoton produced from `pump`.
///
/// Bin weights follow the squared pump amplitudes, renormalized; the
/// long-bin term carries the doubled pump phase with a leading minus sign,
/// giving `(|SS> - e^{2i phi_p} |LL>) / sqrt 2` for the canonical pump.
pub fn pair_state_from_pump(pump: &PumpBinState) -> Result<TimeBinAmplitudes> {
    let n = pump.norm_sqr();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::Unnormalized(n));
    }
    let ss = pump.amp_short * pump.amp_short;
    let ll = -(pump.amp_long * pump.amp_long);
    let scale = (ss.norm_sqr() + ll.norm_sqr()).sqrt();
    Ok(TimeBinAmplitudes {
        amp_ss: ss / scale,
        amp_ll: ll / scale,
        amp_sl: Complex64::new(0.0, 0.0),
        amp_ls: Complex64::new(0.0, 0.0),
    })
}

/// Where a photon leaves its analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArrivalSlot {
    Early,
    Central,
    Late,
}

impl ArrivalSlot {
    pub const ALL: [ArrivalSlot; 3] = [ArrivalSlot::Early, ArrivalSlot::Central, ArrivalSlot::Late];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

/// Per-photon analyzer result: a monitored arrival slot, or the other port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Monitored(ArrivalSlot),
    Unmonitored,
}

impl Outcome {
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        match self {
            Outcome::Monitored(s) => s.index(),
            Outcome::Unmonitored => 3,
        }
    }

    pub fn from_index(i: usize) -> Self {
        ArrivalSlot::from_index(i).map_or(Outcome::Unmonitored, Outcome::Monitored)
    }
}

/// Joint probabilities of (signal outcome, idler outcome).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalDistribution {
    probs: [[f64; Outcome::COUNT]; Outcome::COUNT],
}

impl ArrivalDistribution {
    pub fn from_table(probs: [[f64; Outcome::COUNT]; Outcome::COUNT]) -> Self {
        ArrivalDistribution { probs }
    }

    pub fn get(&self, signal: Outcome, idler: Outcome) -> f64 {
        self.probs[signal.index()][idler.index()]
    }

    /// The 3x3 block of monitored arrival slots.
    pub fn monitored(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (s, row) in out.iter_mut().enumerate() {
            for (i, cell) in row.iter_mut().enumerate() {
                *cell = self.probs[s][i];
            }
        }
        out
    }

    pub fn central_central(&self) -> f64 {
        self.probs[1][1]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().flatten().sum()
    }

    /// Probability the signal photon ends in `outcome`, idler ignored.
    pub fn signal_marginal(&self, outcome: Outcome) -> f64 {
        self.probs[outcome.index()].iter().sum()
    }

    pub fn idler_marginal(&self, outcome: Outcome) -> f64 {
        self.probs.iter().map(|row| row[outcome.index()]).sum()
    }

    /// Row-major flattening, index `4 * signal + idler`.
    pub fn flat(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for s in 0..4 {
            for i in 0..4 {
                out[4 * s + i] = self.probs[s][i];
            }
        }
        out
    }
}

/// Single-photon analyzer map: bin (0 short, 1 long) to (port, slot).
/// Port 0 is monitored. Slot index is `bin + arm`.
fn analyzer_matrix(phi: f64) -> [[[Complex64; 3]; 2]; 2] {
    let zero = Complex64::new(0.0, 0.0);
    let short = Complex64::new(0.5, 0.0);
    let long = Complex64::from_polar(0.5, phi);
    let mut m = [[[zero; 3]; 2]; 2];
    for bin in 0..2 {
        m[bin][0][bin] += short;
        m[bin][0][bin + 1] += long;
        m[bin][1][bin] += short;
        m[bin][1][bin + 1] -= long;
    }
    m
}

/// Propagates a pair through the signal and idler analyzers.
///
/// `v_cap` scales every interference term, standing in for residual
/// distinguishability and phase noise. Returns the joint outcome table.
pub fn analyzer_transform(
    state: &TimeBinAmplitudes,
    phi_s: f64,
    phi_i: f64,
    v_cap: f64,
) -> Result<ArrivalDistribution> {
    if !(0.0..=1.0).contains(&v_cap) {
        return Err(Error::OutOfRange {
            name: "v_cap",
            value: v_cap,
        });
    }
    for phi in [phi_s, phi_i] {
        if !phi.is_finite() {
            return Err(Error::NonFinitePhase(phi));
        }
    }
    let n = state.norm_sqr();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::Unnormalized(n));
    }
    let us = analyzer_matrix(phi_s);
    let ui = analyzer_matrix(phi_i);

    let mut probs = [[0.0; Outcome::COUNT]; Outcome::COUNT];
    for ps in 0..2 {
        for ss in 0..3 {
            for pi in 0..2 {
                for si in 0..3 {
                    let mut coherent = Complex64::new(0.0, 0.0);
                    let mut incoherent = 0.0;
                    for bs in 0..2 {
                        for bi in 0..2 {
                            let term = state.get(bs, bi) * us[bs][ps][ss] * ui[bi][pi][si];
                            coherent += term;
                            incoherent += term.norm_sqr();
                        }
                    }
                    let p = incoherent + v_cap * (coherent.norm_sqr() - incoherent);
                    let os = if ps == 0 { ss } else { 3 };
                    let oi = if pi == 0 { si } else { 3 };
                    probs[os][oi] += p;
                }
            }
        }
    }
    Ok(ArrivalDistribution { probs })
}

/// Reads one monitored cell of `dist`.
pub fn coincidence_probability(dist: &ArrivalDistribution, slot_s: ArrivalSlot, slot_i: ArrivalSlot) -> f64 {
    dist.get(Outcome::Monitored(slot_s), Outcome::Monitored(slot_i))
}

/// Gaussian temporal mode of a filtered photon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalMode {
    pub center_time_ps: f64,
    pub coherence_sigma_ps: f64,
}

impl TemporalMode {
    pub fn new(center_time_ps: f64, coherence_sigma_ps: f64) -> Result<Self> {
        if !(coherence_sigma_ps > 0.0 && coherence_sigma_ps.is_finite()) {
            return Err(Error::OutOfRange {
                name: "coherence_sigma_ps",
                value: coherence_sigma_ps,
            });
        }
        Ok(TemporalMode {
            center_time_ps,
            coherence_sigma_ps,
        })
    }

    /// Transform-limited Gaussian whose spectral intensity FWHM is
    /// `bandwidth_ghz`; the returned sigma is the RMS width of the temporal
    /// intensity profile.
    pub fn from_bandwidth_ghz(bandwidth_ghz: f64) -> Result<Self> {
        Self::new(0.0, coherence_sigma_for_bandwidth(bandwidth_ghz))
    }
}

/// RMS temporal width (ps) of a transform-limited Gaussian with spectral
/// intensity FWHM `bandwidth_ghz`.
pub fn coherence_sigma_for_bandwidth(bandwidth_ghz: f64) -> f64 {
    // sigma_t * sigma_omega = 1/2 for intensity RMS widths
    let sigma_nu_ghz = bandwidth_ghz / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    1e3 / (4.0 * std::f64::consts::PI * sigma_nu_ghz)
}

/// Squared overlap of two copies of `mode` offset by `delay_ps`.
pub fn temporal_overlap(delay_ps: f64, mode: &TemporalMode) -> f64 {
    let s = mode.coherence_sigma_ps;
    (-delay_ps * delay_ps / (4.0 * s * s)).exp()
}

/// Probability that two photons meeting at a balanced coupler leave by
/// different ports, given mode overlap `m` and an interference-free
/// admixture `epsilon_multi`.
pub fn hom_coincidence_probability(m: f64, epsilon_multi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::OutOfRange { name: "M", value: m });
    }
    if !(0.0..1.0).contains(&epsilon_multi) {
        return Err(Error::OutOfRange {
            name: "epsilon_multi",
            value: epsilon_multi,
        });
    }
    Ok((1.0 - epsilon_multi) * (1.0 - m) / 2.0 + epsilon_multi / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn canonical(phi_p: f64) -> TimeBinAmplitudes {
        pair_state_from_pump(&pump_after_umi(phi_p).unwrap()).unwrap()
    }

    #[test]
    fn pump_preparation() {
        let p = pump_after_umi(0.0).unwrap();
        assert_abs_diff_eq!(p.amp_short.re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(p.amp_long.re, -FRAC_1_SQRT_2, epsilon = 1e-15);
        let p = pump_after_umi(PI).unwrap();
        assert_abs_diff_eq!(p.amp_long.re, FRAC_1_SQRT_2, epsilon = 1e-15);
        let p = pump_after_umi(FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(p.amp_long.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.amp_long.im, -FRAC_1_SQRT_2, epsilon = 1e-15);
        assert!(matches!(pump_after_umi(f64::NAN), Err(Error::NonFinitePhase(_))));
        assert!(pump_after_umi(f64::INFINITY).is_err());
    }

    #[test]
    fn pair_phase_is_doubled() {
        let s = canonical(0.0);
        assert_abs_diff_eq!(s.amp_ss.re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amp_ll.re, -FRAC_1_SQRT_2, epsilon = 1e-15);
        let s = canonical(FRAC_PI_2);
        assert_abs_diff_eq!(s.amp_ll.re, FRAC_1_SQRT_2, epsilon = 1e-15);
        let s = canonical(FRAC_PI_4);
        assert_abs_diff_eq!(s.amp_ll.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amp_ll.im, -FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_eq!(s.amp_sl, Complex64::new(0.0, 0.0));
        assert_eq!(s.amp_ls, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn unbalanced_pump_weights_follow_squares() {
        let pump = PumpBinState {
            amp_short: Complex64::new(0.6, 0.0),
            amp_long: Complex64::new(0.8, 0.0),
            phase: 0.0,
        };
        let s = pair_state_from_pump(&pump).unwrap();
        let ratio = s.amp_ll.norm() / s.amp_ss.norm();
        assert_abs_diff_eq!(ratio, 0.64 / 0.36, epsilon = 1e-12);
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-12);

        let bad = PumpBinState {
            amp_short: Complex64::new(1.0, 0.0),
            amp_long: Complex64::new(1.0, 0.0),
            phase: 0.0,
        };
        assert!(matches!(pair_state_from_pump(&bad), Err(Error::Unnormalized(_))));
    }

    #[test]
    fn central_central_fringe() {
        let d = analyzer_transform(&canonical(0.0), 0.0, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(d.central_central(), 0.0, epsilon = 1e-15);
        let d = analyzer_transform(&canonical(FRAC_PI_2), 0.0, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(d.central_central(), 0.125, epsilon = 1e-15);
        for phi in [0.3, 1.1, 2.9] {
            let d = analyzer_transform(&canonical(phi), 0.7, -0.2, 0.0).unwrap();
            assert_abs_diff_eq!(d.central_central(), 1.0 / 16.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn slot_cells() {
        let d = analyzer_transform(&canonical(1.3), 0.4, 2.2, 0.9).unwrap();
        assert_abs_diff_eq!(
            coincidence_probability(&d, ArrivalSlot::Early, ArrivalSlot::Early),
            1.0 / 32.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            coincidence_probability(&d, ArrivalSlot::Early, ArrivalSlot::Late),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(d.total(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.signal_marginal(Outcome::Unmonitored), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.idler_marginal(Outcome::Monitored(ArrivalSlot::Central)), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn v_cap_range() {
        let s = canonical(0.0);
        assert!(analyzer_transform(&s, 0.0, 0.0, 1.01).is_err());
        assert!(analyzer_transform(&s, 0.0, 0.0, -0.01).is_err());
        assert!(analyzer_transform(&s, f64::NAN, 0.0, 0.5).is_err());
    }

    #[test]
    fn temporal_overlap_values() {
        let mode = TemporalMode::new(0.0, 3.0).unwrap();
        assert_eq!(temporal_overlap(0.0, &mode), 1.0);
        assert_abs_diff_eq!(temporal_overlap(6.0, &mode), (-1.0f64).exp(), epsilon = 1e-15);
        assert!(temporal_overlap(1e4, &mode) < 1e-300);
        assert!(TemporalMode::new(0.0, 0.0).is_err());
        // 100 GHz transform-limited Gaussian: ~1.87 ps intensity RMS
        let sigma = coherence_sigma_for_bandwidth(100.0);
        assert!((sigma - 1.874).abs() < 1e-3, "{sigma}");
    }

    #[test]
    fn hom_probability() {
        assert_eq!(hom_coincidence_probability(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(hom_coincidence_probability(0.0, 0.0).unwrap(), 0.5);
        assert_abs_diff_eq!(hom_coincidence_probability(1.0, 0.2).unwrap(), 0.1, epsilon = 1e-15);
        assert!(hom_coincidence_probability(1.1, 0.0).is_err());
        assert!(hom_coincidence_probability(0.5, 1.0).is_err());
    }
}
