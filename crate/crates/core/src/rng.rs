//! Counter-based random streams.
//!
//! Every random draw in a simulation comes from a Philox4x32-10 stream
//! addressed by `(seed, position, stage)`, where `position` is a pulse index
//! and `stage` names the pipeline step. Draws therefore depend only on what
//! is being simulated, never on which thread simulates it or in what order.

use rand::{Error as RandError, RngCore};

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = (a as u64) * (b as u64);
    ((p >> 32) as u32, p as u32)
}

/// Philox4x32 with ten rounds.
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// Pipeline stages that draw random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Stage {
    Emission = 1,
    Analyzer = 2,
    Routing = 3,
    Loss = 4,
    Jitter = 5,
    Raman = 6,
    Dark = 7,
    Coupler = 8,
    Test = 99,
}

/// A stream of random numbers for one `(seed, position, stage, lane)`.
///
/// `lane` separates independent streams that share a stage, such as the
/// time slots or detectors of one batch.
#[derive(Debug, Clone)]
pub struct StreamRng {
    key: [u32; 2],
    ctr: [u32; 4],
    buf: [u32; 4],
    used: usize,
}

impl StreamRng {
    pub fn new(seed: u64, position: u64, stage: Stage, lane: u32) -> Self {
        let tag = ((stage as u32) << 16) ^ lane;
        StreamRng {
            key: [seed as u32, (seed >> 32) as u32],
            ctr: [0, tag, position as u32, (position >> 32) as u32],
            buf: [0; 4],
            used: 4,
        }
    }

    fn refill(&mut self) {
        self.buf = philox4x32_10(self.ctr, self.key);
        self.ctr[0] = self.ctr[0].wrapping_add(1);
        self.used = 0;
    }

    /// Uniform draw in the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        p >= 1.0 || (p > 0.0 && self.uniform() < p)
    }

    /// Standard normal draw (Box-Muller, one value per call).
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Number of failures before the first success, success probability `p`.
    pub fn geometric(&mut self, p: f64) -> u64 {
        if p >= 1.0 {
            return 0;
        }
        if p <= 0.0 {
            return u64::MAX;
        }
        let k = (self.uniform().ln() / (-p).ln_1p()).floor();
        if k >= u64::MAX as f64 {
            u64::MAX
        } else {
            k as u64
        }
    }

    /// Index drawn from unnormalized `weights`.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut u = self.uniform() * total;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                return i;
            }
            u -= w;
        }
        weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
    }

    /// Poisson draw; inversion for small means, normal-free PTRS otherwise.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        if mean < 30.0 {
            let limit = (-mean).exp();
            let mut k = 0;
            let mut prod = self.uniform();
            while prod > limit {
                prod *= self.uniform();
                k += 1;
            }
            return k;
        }
        use rand_distr::{Distribution, Poisson};
        Poisson::new(mean).expect("finite positive mean").sample(self) as u64
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        if self.used == 4 {
            self.refill();
        }
        let v = self.buf[self.used];
        self.used += 1;
        v
    }

    fn next_u64(&mut self) -> u64 {
        let lo = self.next_u32() as u64;
        let hi = self.next_u32() as u64;
        (hi << 32) | lo
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(4) {
            let bytes = self.next_u32().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), RandError> {
        self.fill_bytes(dest);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn philox_known_answers() {
        // Random123 reference vectors for philox4x32-10
        assert_eq!(
            philox4x32_10([0, 0, 0, 0], [0, 0]),
            [0x6627_e8d5, 0xe169_c58d, 0xbc57_ac4c, 0x9b00_dbd8]
        );
        assert_eq!(
            philox4x32_10([u32::MAX; 4], [u32::MAX; 2]),
            [0x408f_276d, 0x41c8_3b0e, 0xa20b_c7c6, 0x6d54_51fd]
        );
        assert_eq!(
            philox4x32_10(
                [0x243f_6a88, 0x85a3_08d3, 0x1319_8a2e, 0x0370_7344],
                [0xa409_3822, 0x299f_31d0]
            ),
            [0xd16c_fe09, 0x94fd_cceb, 0x5001_e420, 0x2412_6ea1]
        );
    }

    #[test]
    fn streams_are_addressed() {
        let a: Vec<u64> = {
            let mut r = StreamRng::new(7, 100, Stage::Emission, 0);
            (0..8).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = StreamRng::new(7, 100, Stage::Emission, 0);
            (0..8).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        let mut other_stage = StreamRng::new(7, 100, Stage::Loss, 0);
        let mut other_pos = StreamRng::new(7, 101, Stage::Emission, 0);
        let mut other_lane = StreamRng::new(7, 100, Stage::Emission, 1);
        assert_ne!(other_stage.next_u64(), a[0]);
        assert_ne!(other_pos.next_u64(), a[0]);
        assert_ne!(other_lane.next_u64(), a[0]);
    }

    #[test]
    fn uniform_moments() {
        let mut r = StreamRng::new(1, 0, Stage::Test, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| r.uniform()).collect();
        assert!(xs.iter().all(|&x| x > 0.0 && x < 1.0));
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 3.0 * (1.0 / 12.0 / n as f64).sqrt() * 1.5);
        assert!((var - 1.0 / 12.0).abs() < 2e-3);
    }

    #[test]
    fn geometric_mean() {
        let mut r = StreamRng::new(2, 0, Stage::Test, 0);
        let p = 0.2;
        let n = 100_000;
        let mean = (0..n).map(|_| r.geometric(p) as f64).sum::<f64>() / n as f64;
        let expect = (1.0 - p) / p;
        let sd = ((1.0 - p) / (p * p) / n as f64).sqrt();
        assert!((mean - expect).abs() < 4.0 * sd, "{mean} vs {expect}");
        assert_eq!(r.geometric(1.0), 0);
        assert_eq!(r.geometric(0.0), u64::MAX);
    }

    #[test]
    fn poisson_mean() {
        let mut r = StreamRng::new(3, 0, Stage::Test, 0);
        for mean in [0.5, 4.0, 120.0] {
            let n = 50_000;
            let m = (0..n).map(|_| r.poisson(mean) as f64).sum::<f64>() / n as f64;
            assert!((m - mean).abs() < 4.0 * (mean / n as f64).sqrt(), "{m} vs {mean}");
        }
        assert_eq!(r.poisson(0.0), 0);
    }
}
