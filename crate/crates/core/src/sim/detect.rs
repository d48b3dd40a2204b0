//! Loss thinning, detector timing and noise records.

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// What produced a detection. Diagnostic only: counting never looks at it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Signal,
    Idler,
    Raman,
    Dark,
}

/// One time-tagged click.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionRecord {
    pub detector_id: u16,
    pub time_tag_ps: i64,
    pub origin: Origin,
    /// Sub-pulse that produced the photon, for photon origins.
    pub source_slot: Option<u8>,
}

/// Bernoulli thinning by `transmittance`.
pub fn apply_loss(transmittance: f64, rng: &mut StreamRng) -> Result<bool> {
    if !(0.0..=1.0).contains(&transmittance) {
        return Err(Error::OutOfRange {
            name: "transmittance",
            value: transmittance,
        });
    }
    Ok(rng.bernoulli(transmittance))
}

/// Detector time tag for a photon arriving at `arrival_ps`: Gaussian
/// jitter, rounded half-to-even onto the picosecond grid. Efficiency lives
/// in the loss ledger and is not applied here.
pub fn detect(arrival_ps: f64, jitter_sigma_ps: f64, rng: &mut StreamRng) -> i64 {
    let jitter = if jitter_sigma_ps > 0.0 {
        jitter_sigma_ps * rng.standard_normal()
    } else {
        0.0
    };
    (arrival_ps + jitter).round_ties_even() as i64
}

/// Dark counts of one detector over `[start_ps, end_ps)`: Poisson number,
/// uniform times, returned in time order.
pub fn inject_noise(
    detector_id: u16,
    dark_rate_hz: f64,
    start_ps: i64,
    end_ps: i64,
    rng: &mut StreamRng,
) -> Vec<DetectionRecord> {
    let span = (end_ps - start_ps).max(0);
    let n = rng.poisson(dark_rate_hz * span as f64 * 1e-12);
    let mut times: Vec<i64> = (0..n)
        .map(|_| start_ps + ((rng.uniform() * span as f64) as i64).min(span - 1))
        .collect();
    times.sort_unstable();
    times
        .into_iter()
        .map(|t| DetectionRecord {
            detector_id,
            time_tag_ps: t,
            origin: Origin::Dark,
            source_slot: None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::default_path_ledger;
    use crate::rng::Stage;

    fn survival(t: f64, n: u64, seed: u64) -> f64 {
        let mut rng = StreamRng::new(seed, 0, Stage::Test, 0);
        (0..n).filter(|_| apply_loss(t, &mut rng).unwrap()).count() as f64 / n as f64
    }

    #[test]
    fn loss_thinning() {
        assert_eq!(survival(1.0, 10_000, 1), 1.0);
        assert_eq!(survival(0.0, 10_000, 1), 0.0);
        let mut rng = StreamRng::new(0, 0, Stage::Test, 0);
        assert!(apply_loss(1.2, &mut rng).is_err());
        assert!(apply_loss(-0.1, &mut rng).is_err());
        for (passes, expect) in [(1, 0.0269), (2, 0.0151)] {
            let t = default_path_ledger(passes).transmittance();
            assert!((t - expect).abs() < 1e-4);
            let n = 1_000_000;
            let got = survival(t, n, 2);
            let sd = (t * (1.0 - t) / n as f64).sqrt();
            assert!((got - t).abs() < 3.0 * sd, "{got} vs {t}");
        }
    }

    #[test]
    fn jitter_statistics() {
        let mut rng = StreamRng::new(5, 0, Stage::Test, 0);
        assert_eq!(detect(1234.0, 0.0, &mut rng), 1234);
        assert_eq!(detect(2.5, 0.0, &mut rng), 2);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| detect(0.0, 50.0, &mut rng) as f64).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((sd - 50.0).abs() < 1.0, "{sd}");
    }

    #[test]
    fn dark_counts() {
        let mut rng = StreamRng::new(6, 0, Stage::Test, 0);
        assert!(inject_noise(0, 0.0, 0, 10_000_000_000_000, &mut rng).is_empty());
        // 100 Hz over 10 s
        let recs = inject_noise(3, 100.0, 0, 10_000_000_000_000, &mut rng);
        assert!((recs.len() as f64 - 1000.0).abs() < 3.0 * 1000f64.sqrt());
        assert!(recs.windows(2).all(|w| w[0].time_tag_ps <= w[1].time_tag_ps));
        assert!(recs.iter().all(|r| r.detector_id == 3 && r.origin == Origin::Dark));
    }
}
