//! Figures of merit from raw counts.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::ledger::LossLedger;

/// `counts = baseline * (1 - visibility * cos(2 pi phase / period - phase_offset))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub visibility: f64,
    pub phase_offset: f64,
    pub period: f64,
    pub baseline: f64,
    pub residual_rms: f64,
}

impl FringeFit {
    pub fn eval(&self, phase: f64) -> f64 {
        self.baseline * (1.0 - self.visibility * (TAU * phase / self.period - self.phase_offset).cos())
    }
}

/// Model parameters `[baseline, visibility, offset, period]`, unclamped.
type Params = [f64; 4];

fn model(p: &Params, x: f64) -> f64 {
    p[0] * (1.0 - p[1] * (TAU * x / p[3] - p[2]).cos())
}

fn ssr(points: &[(f64, f64)], p: &Params) -> f64 {
    points.iter().map(|&(x, y)| (y - model(p, x)).powi(2)).sum()
}

/// Exact least squares at a fixed period, through the linear form
/// `c0 + c1 cos(kx) + c2 sin(kx)`.
fn linear_fit(points: &[(f64, f64)], period: f64) -> Option<Params> {
    let k = TAU / period;
    let mut ata = Matrix3::zeros();
    let mut aty = Vector3::zeros();
    for &(x, y) in points {
        let row = Vector3::new(1.0, (k * x).cos(), (k * x).sin());
        ata += row * row.transpose();
        aty += row * y;
    }
    let c = ata.lu().solve(&aty)?;
    let amp = c[1].hypot(c[2]);
    if c[0] == 0.0 {
        return None;
    }
    let offset = (-c[2]).atan2(-c[1]);
    Some([c[0], amp / c[0], offset, period])
}

/// Damped Gauss-Newton on all four parameters.
fn levenberg_marquardt(points: &[(f64, f64)], start: Params) -> Params {
    let mut p = start;
    let mut cost = ssr(points, &p);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for &(x, y) in points {
            let arg = TAU * x / p[3] - p[2];
            let (s, c) = arg.sin_cos();
            let r = y - model(&p, x);
            let grad = Vector4::new(
                1.0 - p[1] * c,
                -p[0] * c,
                -p[0] * p[1] * s,
                p[0] * p[1] * s * (-TAU * x / (p[3] * p[3])),
            );
            jtj += grad * grad.transpose();
            jtr += grad * r;
        }
        let mut improved = false;
        for _ in 0..20 {
            let mut damped = jtj;
            for i in 0..4 {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]];
            let trial_cost = if trial[3] > 0.0 { ssr(points, &trial) } else { f64::INFINITY };
            if trial_cost < cost {
                let rel = (cost - trial_cost) / cost.max(1e-300);
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                improved = rel > 1e-15;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    p
}

fn finish(points: &[(f64, f64)], p: Params) -> Result<FringeFit> {
    let [mut b, mut v, mut o, period] = p;
    if !(b.is_finite() && v.is_finite() && o.is_finite() && period.is_finite()) || b <= 0.0 {
        return Err(Error::Degenerate("fringe fit did not converge to a positive baseline"));
    }
    if v < 0.0 {
        v = -v;
        o += std::f64::consts::PI;
    }
    o = o.rem_euclid(TAU);
    let residual_rms = (ssr(points, &[b, v, o, period]) / points.len() as f64).sqrt();
    b = b.max(0.0);
    Ok(FringeFit {
        visibility: v.clamp(0.0, 1.0),
        phase_offset: o,
        period,
        baseline: b,
        residual_rms,
    })
}

/// Least-squares fringe fit. With `fixed_period` only baseline,
/// visibility and offset are free and the solution is exact; otherwise the
/// period is located by a scan and refined by damped least squares
/// restarted from three offsets.
pub fn fit_fringe(points: &[(f64, f64)], fixed_period: Option<f64>) -> Result<FringeFit> {
    if points.len() < 5 {
        return Err(Error::InsufficientPoints {
            needed: 5,
            got: points.len(),
        });
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Degenerate("non-finite fringe data"));
    }
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), (x, _)| (l.min(*x), h.max(*x)));
    let span = hi - lo;
    let flat = points.iter().all(|(_, y)| *y == points[0].1);

    if let Some(period) = fixed_period {
        if !(period > 0.0) {
            return Err(Error::OutOfRange {
                name: "period",
                value: period,
            });
        }
        if span < period * (1.0 - 1e-9) {
            return Err(Error::Degenerate("sweep shorter than one period"));
        }
        if flat {
            if points[0].1 <= 0.0 {
                return Err(Error::Degenerate("all counts zero"));
            }
            return finish(points, [points[0].1, 0.0, 0.0, period]);
        }
        let p = linear_fit(points, period).ok_or(Error::Degenerate("singular fringe design"))?;
        return finish(points, p);
    }

    if flat {
        return Err(Error::Degenerate("flat counts leave the period undetermined"));
    }
    if !(span > 0.0) {
        return Err(Error::Degenerate("sweep has zero span"));
    }
    // scan whole and fractional cycle counts across the sweep
    let max_cycles = (points.len() as f64 - 1.0) / 2.5;
    let mut best: Option<(f64, Params)> = None;
    let mut cycles = 1.0;
    while cycles <= max_cycles.max(1.0) {
        if let Some(p) = linear_fit(points, span / cycles) {
            let c = ssr(points, &p);
            if best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, p));
            }
        }
        cycles += 0.02;
    }
    let (_, seed) = best.ok_or(Error::Degenerate("no fringe period fits"))?;
    let mut winner: Option<(f64, Params)> = None;
    for start_offset in [seed[2], 0.0, TAU / 3.0, 2.0 * TAU / 3.0] {
        let p = levenberg_marquardt(points, [seed[0], seed[1], start_offset, seed[3]]);
        let c = ssr(points, &p);
        if p[3] > 0.0 && p[0] > 0.0 && winner.is_none_or(|(wc, _)| c < wc) {
            winner = Some((c, p));
        }
    }
    let (_, p) = winner.ok_or(Error::Degenerate("fringe fit did not converge"))?;
    finish(points, p)
}

/// Standard error of the fixed-period visibility, propagating Poisson
/// variance (`max(counts, 1)`) of each point through the linear fit.
pub fn visibility_uncertainty(points: &[(f64, f64)], period: f64) -> Result<f64> {
    if points.len() < 5 {
        return Err(Error::InsufficientPoints {
            needed: 5,
            got: points.len(),
        });
    }
    let k = TAU / period;
    let mut ata = Matrix3::zeros();
    let mut aty = Vector3::zeros();
    let mut meat = Matrix3::zeros();
    for &(x, y) in points {
        let row = Vector3::new(1.0, (k * x).cos(), (k * x).sin());
        ata += row * row.transpose();
        aty += row * y;
        meat += row * row.transpose() * y.max(1.0);
    }
    let inv = ata.try_inverse().ok_or(Error::Degenerate("singular fringe design"))?;
    let c = inv * aty;
    let cov = inv * meat * inv;
    let r = c[1].hypot(c[2]);
    if c[0] <= 0.0 {
        return Err(Error::Degenerate("non-positive fringe baseline"));
    }
    if r == 0.0 {
        return Ok((cov[(1, 1)] + cov[(2, 2)]).sqrt() / c[0]);
    }
    let g = Vector3::new(-r / (c[0] * c[0]), c[1] / (r * c[0]), c[2] / (r * c[0]));
    Ok((g.transpose() * cov * g)[(0, 0)].max(0.0).sqrt())
}

/// `(c_max - c_min) / (c_max + c_min)`.
pub fn visibility(c_max: f64, c_min: f64) -> Result<f64> {
    if !(c_max >= c_min && c_min >= 0.0) {
        return Err(Error::Degenerate("visibility needs c_max >= c_min >= 0"));
    }
    if c_max + c_min <= 0.0 {
        return Err(Error::Degenerate("visibility of zero counts"));
    }
    Ok((c_max - c_min) / (c_max + c_min))
}

/// Fringe with accidentals removed point by point: `(phase, C - A)`.
pub fn subtract_accidentals(points: &[(f64, f64, f64)]) -> Vec<(f64, f64)> {
    points.iter().map(|&(x, c, a)| (x, c - a)).collect()
}

/// Whether a two-photon visibility exceeds the CHSH bound `1/sqrt(2)`.
pub fn chsh_violation(v: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange {
            name: "visibility",
            value: v,
        });
    }
    Ok(v > FRAC_1_SQRT_2)
}

pub fn compute_car(coincidences: f64, accidentals: f64) -> Result<f64> {
    if !(accidentals > 0.0) {
        return Err(Error::UndefinedCar { coincidences });
    }
    if coincidences < 0.0 {
        return Err(Error::OutOfRange {
            name: "coincidences",
            value: coincidences,
        });
    }
    Ok(coincidences / accidentals)
}

/// Poisson standard error of `coincidences / accidentals`.
pub fn car_uncertainty(coincidences: f64, accidentals: f64) -> Result<f64> {
    let car = compute_car(coincidences, accidentals)?;
    let rel = if coincidences > 0.0 {
        (1.0 / coincidences + 1.0 / accidentals).sqrt()
    } else {
        (1.0 / accidentals).sqrt()
    };
    Ok(car * rel)
}

/// Raw and dark-subtracted HOM dip visibility with Poisson errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomVisibility {
    pub raw: f64,
    pub raw_uncertainty: f64,
    pub net: Option<f64>,
    pub net_uncertainty: Option<f64>,
}

pub fn hom_visibility(dip: f64, baseline: f64, dark: Option<f64>) -> Result<HomVisibility> {
    if !(baseline > 0.0) || dip < 0.0 {
        return Err(Error::Degenerate("HOM visibility needs a positive baseline"));
    }
    let raw = ((baseline - dip) / baseline).clamp(-1.0, 1.0);
    // d/d dip = -1/B, d/dB = dip/B^2
    let raw_uncertainty = (dip / baseline.powi(2) + dip.powi(2) / baseline.powi(3)).sqrt();
    let (net, net_uncertainty) = match dark {
        None => (None, None),
        Some(d) => {
            if !(d >= 0.0 && d < baseline) {
                return Err(Error::Degenerate("dark fourfolds must lie below the baseline"));
            }
            let den = baseline - d;
            let net = ((baseline - dip) / den).clamp(-1.0, 1.0);
            let d_base = (dip - d) / den.powi(2);
            let d_dip = -1.0 / den;
            let d_dark = (baseline - dip) / den.powi(2);
            let var = d_base.powi(2) * baseline + d_dip.powi(2) * dip + d_dark.powi(2) * d;
            (Some(net), Some(var.sqrt()))
        }
    };
    Ok(HomVisibility {
        raw,
        raw_uncertainty,
        net,
        net_uncertainty,
    })
}

/// Dip and baseline from a delay scan: the dip is the point nearest zero
/// delay, the baseline averages points at least `far_ps` away. Returns
/// `(dip, baseline, dark)` with the dark level averaged over all points.
pub fn hom_scan_levels(points: &[(f64, f64, f64)], far_ps: f64) -> Result<(f64, f64, f64)> {
    let dip = points
        .iter()
        .min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
        .ok_or(Error::InsufficientPoints { needed: 2, got: 0 })?;
    let far: Vec<f64> = points.iter().filter(|p| p.0.abs() >= far_ps).map(|p| p.1).collect();
    if far.is_empty() {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: points.len(),
        });
    }
    let baseline = far.iter().sum::<f64>() / far.len() as f64;
    let dark = points.iter().map(|p| p.2).sum::<f64>() / points.len() as f64;
    Ok((dip.1, baseline, dark))
}

/// Total loss and transmittance of a ledger.
pub fn ledger_total(ledger: &LossLedger) -> (f64, f64) {
    (ledger.total_db(), ledger.transmittance())
}
