//! Bit error ratios of a Gray-labelled shaped 8PAM rail under clipping noise
//! plus white Gaussian noise. Every length here is in units of the
//! half-spacing `d`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::{integrate, normal_cdf, q_function, QuadratureSpec};
use crate::shaping::{gray_bits, gray_error_regions, label_bit, AmplitudeDistribution, LEVELS, MAGNITUDES};

use super::fit::PiecewiseExpFit;

/// White noise beyond this many standard deviations is ignored.
const WHITE_REACH: f64 = 12.0;

/// Clipping noise conditioned on one positive transmitted level.
#[derive(Debug, Clone, PartialEq)]
pub enum LevelNoise {
    /// No clipping noise.
    Absent,
    Gaussian { std: f64 },
    Piecewise(PiecewiseExpFit),
}

impl LevelNoise {
    fn mirrored(&self) -> Self {
        match self {
            LevelNoise::Piecewise(f) => LevelNoise::Piecewise(f.mirrored()),
            other => other.clone(),
        }
    }

    /// Noise of `c` times this variable.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            LevelNoise::Absent => LevelNoise::Absent,
            LevelNoise::Gaussian { std } => LevelNoise::Gaussian { std: std * c },
            LevelNoise::Piecewise(f) => LevelNoise::Piecewise(f.scaled(c)),
        }
    }
}

/// Clipping noise for the magnitudes 1, 3, 5, 7; negative levels use the
/// mirror image.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipNoiseSet {
    pub magnitudes: [LevelNoise; 4],
}

impl ClipNoiseSet {
    pub fn gaussian(std: f64) -> Self {
        let g = LevelNoise::Gaussian { std };
        Self {
            magnitudes: [g.clone(), g.clone(), g.clone(), g],
        }
    }

    pub fn absent() -> Self {
        Self {
            magnitudes: [LevelNoise::Absent, LevelNoise::Absent, LevelNoise::Absent, LevelNoise::Absent],
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            magnitudes: self.magnitudes.clone().map(|n| n.scaled(c)),
        }
    }
}

/// `P(Y + W <= t)` with `Y` the clipping noise and `W ~ N(0, sigma_w^2)`.
pub fn lower_tail(noise: &LevelNoise, sigma_w: f64, t: f64, quad: &QuadratureSpec) -> Result<f64> {
    match noise {
        LevelNoise::Absent => Ok(gaussian_lower(t, sigma_w)),
        LevelNoise::Gaussian { std } => Ok(gaussian_lower(t, std.hypot(sigma_w))),
        LevelNoise::Piecewise(fit) => piecewise_lower(fit, sigma_w, t, quad),
    }
}

/// `P(Y + W > t)`.
pub fn upper_tail(noise: &LevelNoise, sigma_w: f64, t: f64, quad: &QuadratureSpec) -> Result<f64> {
    lower_tail(&noise.mirrored(), sigma_w, -t, quad)
}

fn gaussian_lower(t: f64, s: f64) -> f64 {
    if s > 0.0 {
        q_function(-t / s)
    } else if t >= 0.0 {
        1.0
    } else {
        0.0
    }
}

fn piecewise_lower(fit: &PiecewiseExpFit, sigma_w: f64, t: f64, quad: &QuadratureSpec) -> Result<f64> {
    let (lo, hi) = fit.support();
    let upper = (t + WHITE_REACH * sigma_w).min(hi);
    if upper <= lo {
        return Ok(0.0);
    }
    let mut pts: Vec<f64> = fit.breakpoints().into_iter().filter(|p| *p > lo && *p < upper).collect();
    if t > lo && t < upper {
        pts.push(t);
    }
    pts.push(lo);
    pts.push(upper);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let weight = |y: f64| {
        if sigma_w > 0.0 {
            normal_cdf((t - y) / sigma_w)
        } else if y <= t {
            1.0
        } else {
            0.0
        }
    };
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += integrate(|y| fit.pdf(y) * weight(y), w[0], w[1], quad)?;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Probability that the total noise falls in `(a, b)`; `a` may be `-inf`
/// and `b` may be `+inf`. Tails are taken from the side that avoids
/// cancellation.
pub fn region_probability(noise: &LevelNoise, sigma_w: f64, a: f64, b: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(a < b) {
        return Ok(0.0);
    }
    let lower = |t: f64| if t == f64::NEG_INFINITY { Ok(0.0) } else { lower_tail(noise, sigma_w, t, quad) };
    let upper = |t: f64| if t == f64::INFINITY { Ok(0.0) } else { upper_tail(noise, sigma_w, t, quad) };
    let p = if b <= 0.0 {
        lower(b)? - lower(a)?
    } else if a >= 0.0 {
        upper(a)? - upper(b)?
    } else {
        1.0 - lower(a)? - upper(b)?
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Density of the total noise `Z = Y + W` in the form that integrates over
/// the white-noise variable, with the two pieces selected by `z - w`
/// relative to the split.
pub fn combined_pdf(z: f64, fit: &PiecewiseExpFit, sigma_w: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(sigma_w > 0.0) || !sigma_w.is_finite() {
        return Err(Error::InvalidParameter(format!("white-noise std must be positive, got {sigma_w}")));
    }
    let norm = 1.0 / ((2.0 * PI).sqrt() * sigma_w);
    let white = |w: f64| (-(w * w) / (2.0 * sigma_w * sigma_w)).exp();
    let reach = WHITE_REACH * sigma_w;
    // z - w <= split  <=>  w >= z - split
    let cut = z - fit.split;
    let mut total = 0.0;
    let left_lo = cut.max(z - fit.left.location - fit.left.reach()).max(-reach);
    let left_hi = reach.min(z - (fit.left.location - fit.left.reach()));
    if left_lo < left_hi {
        total += integrate_split(|w| white(w) * fit.left.density(z - w), left_lo, left_hi, z - fit.left.location, quad)?;
    }
    let right_lo = (-reach).max(z - fit.right.location - fit.right.reach());
    let right_hi = cut.min(reach).min(z - fit.right.location + fit.right.reach());
    if right_lo < right_hi {
        total += integrate_split(|w| white(w) * fit.right.density(z - w), right_lo, right_hi, z - fit.right.location, quad)?;
    }
    Ok(norm * total)
}

fn integrate_split<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, kink: f64, quad: &QuadratureSpec) -> Result<f64> {
    let mut pts = vec![a, 0.0_f64.clamp(a, b), kink.clamp(a, b), b];
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += integrate(&mut f, w[0], w[1], quad)?;
    }
    Ok(total)
}

/// Error regions (noise intervals relative to the transmitted level) of bit
/// `bit` for the positive level `magnitude`, as printed in the original
/// derivation of the per-bit error ratios.
pub fn published_regions(bit: usize, magnitude: i32) -> Result<Vec<(f64, f64)>> {
    const INF: f64 = f64::INFINITY;
    let regions: &[(f64, f64)] = match (bit, magnitude) {
        (1, 1) => &[(-INF, -1.0)],
        (1, 3) => &[(-INF, -3.0)],
        (1, 5) => &[(-INF, -5.0)],
        (1, 7) => &[(-INF, -7.0)],
        (2, 1) => &[(3.0, INF), (-INF, -5.0)],
        (2, 3) => &[(1.0, INF), (-INF, -7.0)],
        (2, 5) => &[(-9.0, -1.0)],
        (2, 7) => &[(-11.0, 3.0)],
        (3, 1) => &[(1.0, 5.0), (-7.0, -3.0)],
        (3, 3) => &[(3.0, INF), (-5.0, -1.0), (-INF, -9.0)],
        (3, 5) => &[(1.0, INF), (-7.0, -3.0), (-INF, -11.0)],
        (3, 7) => &[(-5.0, -1.0), (-13.0, -9.0)],
        _ => {
            return Err(Error::InvalidParameter(format!(
                "no published region for bit {bit}, level {magnitude}"
            )))
        }
    };
    Ok(regions.to_vec())
}

/// A published region list that disagrees with the Gray decision cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionDiscrepancy {
    pub bit: usize,
    pub magnitude: i32,
    pub published: Vec<(f64, f64)>,
    pub derived: Vec<(f64, f64)>,
}

/// Compares every published region list with the one derived from the
/// decision cells.
pub fn region_discrepancies() -> Vec<RegionDiscrepancy> {
    let mut out = Vec::new();
    for bit in 1..=3 {
        for &k in &MAGNITUDES {
            let mut published = published_regions(bit, k).expect("table covers all bits and magnitudes");
            let mut derived = gray_error_regions(k, bit).expect("valid level");
            published.sort_by(|a, b| a.0.total_cmp(&b.0));
            derived.sort_by(|a, b| a.0.total_cmp(&b.0));
            if published != derived {
                out.push(RegionDiscrepancy {
                    bit,
                    magnitude: k,
                    published,
                    derived,
                });
            }
        }
    }
    out
}

/// Which region table drives [`bit_error_ratios_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionSource {
    /// Regions enumerated from the Gray decision cells.
    Derived,
    /// Regions exactly as printed, including any misprint.
    Published,
}

/// Per-bit error ratios `[E1, E2, E3]` of one rail whose levels follow
/// `dist`, using the decision-cell regions.
pub fn bit_error_ratios(
    dist: &AmplitudeDistribution,
    sigma_w: f64,
    noise: &ClipNoiseSet,
    quad: &QuadratureSpec,
) -> Result<[f64; 3]> {
    bit_error_ratios_with(dist, sigma_w, noise, quad, RegionSource::Derived)
}

pub fn bit_error_ratios_with(
    dist: &AmplitudeDistribution,
    sigma_w: f64,
    noise: &ClipNoiseSet,
    quad: &QuadratureSpec,
    source: RegionSource,
) -> Result<[f64; 3]> {
    if !(sigma_w >= 0.0) || sigma_w.is_nan() {
        return Err(Error::InvalidParameter(format!("white-noise std must be >= 0, got {sigma_w}")));
    }
    dist.validate()?;
    let mut ratios = [0.0; 3];
    for (j, &k) in MAGNITUDES.iter().enumerate() {
        let pr = dist.probs[j];
        if pr == 0.0 {
            continue;
        }
        let level_noise = &noise.magnitudes[j];
        let mut cache = TailCache::new(level_noise, sigma_w, quad);
        for bit in 1..=3 {
            let regions = match source {
                RegionSource::Derived => gray_error_regions(k, bit)?,
                RegionSource::Published => published_regions(bit, k)?,
            };
            let mut p = 0.0;
            for (a, b) in regions {
                p += cache.region(a, b)?;
            }
            ratios[bit - 1] += 2.0 * pr * p;
        }
    }
    Ok(ratios)
}

/// Average of the three per-bit ratios.
pub fn total_ber(ratios: &[f64; 3]) -> f64 {
    (ratios[0] + ratios[1] + ratios[2]) / 3.0
}

/// Per-bit ratios when every decision threshold collapses onto the
/// transmitted level (`d -> 0` with the noise fixed): half of the decisions
/// land on each outermost level.
pub fn collapsed_bit_error_ratios(dist: &AmplitudeDistribution) -> Result<[f64; 3]> {
    let (lo, hi) = (gray_bits(LEVELS[0])?, gray_bits(LEVELS[7])?);
    let mut ratios = [0.0; 3];
    for &level in &LEVELS {
        let word = gray_bits(level)?;
        for bit in 1..=3 {
            let flips = (label_bit(word, bit) != label_bit(lo, bit)) as u8 as f64
                + (label_bit(word, bit) != label_bit(hi, bit)) as u8 as f64;
            ratios[bit - 1] += dist.prob_of(level) * 0.5 * flips;
        }
    }
    Ok(ratios)
}

/// Memoizes tail probabilities at integer thresholds.
struct TailCache<'a> {
    noise: &'a LevelNoise,
    sigma_w: f64,
    quad: &'a QuadratureSpec,
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
}

const CACHE_OFFSET: i64 = 16;

impl<'a> TailCache<'a> {
    fn new(noise: &'a LevelNoise, sigma_w: f64, quad: &'a QuadratureSpec) -> Self {
        Self {
            noise,
            sigma_w,
            quad,
            lower: vec![None; 2 * CACHE_OFFSET as usize + 1],
            upper: vec![None; 2 * CACHE_OFFSET as usize + 1],
        }
    }

    fn slot(t: f64) -> Option<usize> {
        let i = t as i64;
        (i as f64 == t && i.abs() <= CACHE_OFFSET).then(|| (i + CACHE_OFFSET) as usize)
    }

    fn lower(&mut self, t: f64) -> Result<f64> {
        if t == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        match Self::slot(t) {
            Some(i) => {
                if let Some(v) = self.lower[i] {
                    return Ok(v);
                }
                let v = lower_tail(self.noise, self.sigma_w, t, self.quad)?;
                self.lower[i] = Some(v);
                Ok(v)
            }
            None => lower_tail(self.noise, self.sigma_w, t, self.quad),
        }
    }

    fn upper(&mut self, t: f64) -> Result<f64> {
        if t == f64::INFINITY {
            return Ok(0.0);
        }
        match Self::slot(t) {
            Some(i) => {
                if let Some(v) = self.upper[i] {
                    return Ok(v);
                }
                let v = upper_tail(self.noise, self.sigma_w, t, self.quad)?;
                self.upper[i] = Some(v);
                Ok(v)
            }
            None => upper_tail(self.noise, self.sigma_w, t, self.quad),
        }
    }

    fn region(&mut self, a: f64, b: f64) -> Result<f64> {
        if !(a < b) {
            return Ok(0.0);
        }
        let p = if b <= 0.0 {
            self.lower(b)? - self.lower(a)?
        } else if a >= 0.0 {
            self.upper(a)? - self.upper(b)?
        } else {
            1.0 - self.lower(a)? - self.upper(b)?
        };
        Ok(p.clamp(0.0, 1.0))
    }
}
