//! Two-sided power-exponential density and its histogram fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{integrate, QuadratureSpec};

/// Fewest samples accepted by [`fit_piecewise_exp`].
pub const MIN_FIT_SAMPLES: usize = 10_000;
/// Histogram bins spanning the sample range, capped at `mean +- HISTOGRAM_SPAN_SD sd`.
pub const HISTOGRAM_BINS: usize = 200;
/// Cap on the histogram half-width in standard deviations. Clipping noise is
/// heavy tailed, and the tail beyond 6 sd decides the error rate at low SE.
pub const HISTOGRAM_SPAN_SD: f64 = 16.0;
/// Bins with fewer counts are left out of the least-squares fit.
pub const MIN_BIN_COUNT: u64 = 10;
/// Bounds on the shape exponent.
pub const SHAPE_RANGE: (f64, f64) = (0.5, 8.0);

/// `exp(-TAIL_EXPONENT)` relative to the peak is treated as zero density.
const TAIL_EXPONENT: f64 = 46.0;

/// `amplitude * exp(-|y - location|^shape / (2 spread))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpPiece {
    pub amplitude: f64,
    pub location: f64,
    pub shape: f64,
    pub spread: f64,
}

impl ExpPiece {
    #[inline]
    pub fn density(&self, y: f64) -> f64 {
        self.amplitude * (-(y - self.location).abs().powf(self.shape) / (2.0 * self.spread)).exp()
    }

    /// Distance from `location` beyond which the density is negligible.
    pub fn reach(&self) -> f64 {
        (2.0 * self.spread * TAIL_EXPONENT).powf(1.0 / self.shape)
    }

    /// Density of `c * Y` when `Y` has this density.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            amplitude: self.amplitude / c,
            location: self.location * c,
            shape: self.shape,
            spread: self.spread * c.powf(self.shape),
        }
    }

    fn mirrored(&self) -> Self {
        Self {
            location: -self.location,
            ..*self
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.amplitude > 0.0
            && self.amplitude.is_finite()
            && self.location.is_finite()
            && self.shape > 0.0
            && self.shape.is_finite()
            && self.spread > 0.0
            && self.spread.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid density piece {self:?}")))
        }
    }
}

/// Clipping-noise density conditioned on one transmitted level: `left` for
/// `y <= split`, `right` above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseExpFit {
    pub level: i32,
    pub split: f64,
    pub left: ExpPiece,
    pub right: ExpPiece,
    pub sample_count: usize,
    /// Coefficient of determination of the fit on log-density.
    pub r_squared: f64,
    /// `|left(split) - right(split)|` relative to the larger of the two.
    pub density_gap: f64,
}

impl PiecewiseExpFit {
    pub fn pdf(&self, y: f64) -> f64 {
        if y < self.split {
            self.left.density(y)
        } else if y > self.split {
            self.right.density(y)
        } else {
            self.left.density(y).max(self.right.density(y))
        }
    }

    /// Interval outside which both pieces are negligible.
    pub fn support(&self) -> (f64, f64) {
        let lo = (self.left.location - self.left.reach()).min(self.split);
        let hi = (self.right.location + self.right.reach()).max(self.split);
        (lo, hi)
    }

    /// Points where the density is not smooth, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = self.support();
        let mut pts = vec![lo, self.split, hi];
        if self.left.location < self.split && self.left.location > lo {
            pts.push(self.left.location);
        }
        if self.right.location > self.split && self.right.location < hi {
            pts.push(self.right.location);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Total probability mass of the two pieces.
    pub fn mass(&self, quad: &QuadratureSpec) -> Result<f64> {
        let left = integrate(|y| self.left.density(y), f64::NEG_INFINITY, self.split, quad)?;
        let right = integrate(|y| self.right.density(y), self.split, f64::INFINITY, quad)?;
        Ok(left + right)
    }

    /// Rescales both amplitudes so the density integrates to one.
    pub fn normalized(mut self, quad: &QuadratureSpec) -> Result<Self> {
        let mass = self.mass(quad)?;
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::FitFailure(format!("density mass {mass} cannot be normalized")));
        }
        self.left.amplitude /= mass;
        self.right.amplitude /= mass;
        self.density_gap = relative_gap(self.left.density(self.split), self.right.density(self.split));
        Ok(self)
    }

    /// Density of the noise on the sign-flipped level.
    pub fn mirrored(&self) -> Self {
        Self {
            level: -self.level,
            split: -self.split,
            left: self.right.mirrored(),
            right: self.left.mirrored(),
            ..self.clone()
        }
    }

    /// Density of `c * Y`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            split: self.split * c,
            left: self.left.scaled(c),
            right: self.right.scaled(c),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.left.validate()?;
        self.right.validate()?;
        if !self.split.is_finite() {
            return Err(Error::InvalidParameter("non-finite split point".into()));
        }
        Ok(())
    }
}

/// Density of the conditioned clipping noise; evaluates the piece on the
/// side of the split that `y` falls on.
pub fn clip_noise_pdf(y: f64, fit: &PiecewiseExpFit) -> f64 {
    fit.pdf(y)
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m > 0.0 {
        (a - b).abs() / m
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
struct Histogram {
    centers: Vec<f64>,
    counts: Vec<u64>,
    density: Vec<f64>,
}

fn histogram(samples: &[f64]) -> Result<Histogram> {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::FitFailure(format!("samples have no spread (sd = {sd})")));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min).max(mean - HISTOGRAM_SPAN_SD * sd);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max).min(mean + HISTOGRAM_SPAN_SD * sd);
    // widen by a hair so the maximum lands inside the last bin
    let width = (hi - lo) / HISTOGRAM_BINS as f64 * (1.0 + 1e-12);
    let mut counts = vec![0u64; HISTOGRAM_BINS];
    for &x in samples {
        let pos = (x - lo) / width;
        if pos >= 0.0 && pos < HISTOGRAM_BINS as f64 {
            counts[pos as usize] += 1;
        }
    }
    let centers = (0..HISTOGRAM_BINS).map(|i| lo + (i as f64 + 0.5) * width).collect();
    let density = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    Ok(Histogram {
        centers,
        counts,
        density,
    })
}

/// Parameters of one side in the least-squares coordinates
/// `[ln amplitude, location, shape, ln spread]`.
type SideParams = [f64; 4];

fn log_model(p: &SideParams, y: f64) -> (f64, [f64; 4]) {
    let t = y - p[1];
    let at = t.abs();
    let inv = (-p[3]).exp() / 2.0;
    if at == 0.0 {
        return (p[0], [1.0, 0.0, 0.0, 0.0]);
    }
    let pow = at.powf(p[2]);
    let value = p[0] - pow * inv;
    let d_loc = p[2] * at.powf(p[2] - 1.0) * t.signum() * inv;
    let d_shape = -pow * at.ln() * inv;
    let d_spread = pow * inv;
    (value, [1.0, d_loc, d_shape, d_spread])
}

fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            let pivot = a[col];
            for (v, p) in a[row].iter_mut().zip(pivot).skip(col) {
                *v -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let s: f64 = (row + 1..4).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn project(p: &mut SideParams, loc_range: (f64, f64)) {
    p[1] = p[1].clamp(loc_range.0, loc_range.1);
    p[2] = p[2].clamp(SHAPE_RANGE.0, SHAPE_RANGE.1);
    p[3] = p[3].clamp(-700.0, 700.0);
}

fn cost(p: &SideParams, pts: &[(f64, f64)]) -> f64 {
    pts.iter().map(|&(y, v)| (v - log_model(p, y).0).powi(2)).sum()
}

/// Levenberg–Marquardt on `sum (ln density - model)^2` with box constraints
/// applied by projection.
fn levenberg_marquardt(mut p: SideParams, pts: &[(f64, f64)], loc_range: (f64, f64)) -> Result<(SideParams, f64)> {
    project(&mut p, loc_range);
    let mut current = cost(&p, pts);
    let mut lambda = 1e-3;
    for _ in 0..500 {
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for &(y, v) in pts {
            let (m, g) = log_model(&p, y);
            let r = v - m;
            for i in 0..4 {
                jtr[i] += g[i] * r;
                for j in 0..4 {
                    jtj[i][j] += g[i] * g[j];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj;
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += lambda * jtj[i][i].max(1e-12);
            }
            if let Some(step) = solve4(a, jtr) {
                let mut trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]];
                project(&mut trial, loc_range);
                let c = cost(&trial, pts);
                if c.is_finite() && c < current {
                    let gain = current - c;
                    p = trial;
                    current = c;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    if gain <= 1e-14 * current.max(1e-300) {
                        return Ok((p, current));
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !current.is_finite() {
        return Err(Error::FitFailure("least-squares cost is not finite".into()));
    }
    Ok((p, current))
}

/// Fits the two-sided power-exponential density to clipping-noise samples of
/// one transmitted level and normalizes it.
///
/// The samples are binned over their range, capped at `mean +-
/// HISTOGRAM_SPAN_SD sd`; the split is the center of the fullest bin. Each
/// side is fitted, unweighted, to the log-density of its bins holding at least
/// `MIN_BIN_COUNT` samples, so the sparse tail bins that set the error rate
/// count as much as the peak.
pub fn fit_piecewise_exp(samples: &[f64], level: i32, quad: &QuadratureSpec) -> Result<PiecewiseExpFit> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "level {level}: {} samples, at least {MIN_FIT_SAMPLES} required",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("level {level}: non-finite sample")));
    }
    let h = histogram(samples)?;
    let mode = (0..HISTOGRAM_BINS).fold(0, |best, i| if h.counts[i] > h.counts[best] { i } else { best });
    let split = h.centers[mode];
    let loc_range = (h.centers[0], h.centers[HISTOGRAM_BINS - 1]);
    let side_points = |range: std::ops::RangeInclusive<usize>| -> Vec<(f64, f64)> {
        range
            .filter(|&i| h.counts[i] >= MIN_BIN_COUNT)
            .map(|i| (h.centers[i], h.density[i].ln()))
            .collect()
    };
    let left_pts = side_points(0..=mode);
    let right_pts = side_points(mode..=HISTOGRAM_BINS - 1);
    for (name, pts) in [("left", &left_pts), ("right", &right_pts)] {
        if pts.len() < 5 {
            return Err(Error::FitFailure(format!(
                "level {level}: only {} usable bins on the {name} side of the mode at {split}",
                pts.len()
            )));
        }
    }
    let one_sided = |keep: &dyn Fn(f64) -> bool| {
        let (s, c) = samples
            .iter()
            .filter(|&&x| keep(x))
            .fold((0.0, 0usize), |(s, c), &x| (s + (x - split).powi(2), c + 1));
        if c > 0 {
            (s / c as f64).max(1e-300)
        } else {
            1.0
        }
    };
    let peak = h.density[mode].ln();
    let left_init = [peak, split, 2.0, one_sided(&|x| x <= split).ln()];
    let right_init = [peak, split, 2.0, one_sided(&|x| x >= split).ln()];
    let (lp, _) = levenberg_marquardt(left_init, &left_pts, loc_range)?;
    let (rp, _) = levenberg_marquardt(right_init, &right_pts, loc_range)?;

    let residual = cost(&lp, &left_pts) + cost(&rp, &right_pts);
    let all: Vec<f64> = left_pts.iter().chain(&right_pts).map(|p| p.1).collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let total: f64 = all.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if total > 0.0 { 1.0 - residual / total } else { 1.0 };
    let piece = |p: SideParams| ExpPiece {
        amplitude: p[0].exp(),
        location: p[1],
        shape: p[2],
        spread: p[3].exp(),
    };
    let fit = PiecewiseExpFit {
        level,
        split,
        left: piece(lp),
        right: piece(rp),
        sample_count: samples.len(),
        r_squared,
        density_gap: 0.0,
    };
    fit.validate().map_err(|e| Error::FitFailure(format!("level {level}: {e}")))?;
    fit.normalized(quad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Gamma, StandardNormal};

    /// Draws from the two-sided density with pieces meeting at their common
    /// location.
    fn two_sided(n: usize, center: f64, left: (f64, f64), right: (f64, f64), seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // half masses of exp(-t^b / (2 s)) are (2 s)^(1/b) Gamma(1 + 1/b)
        let mass = |(b, s): (f64, f64)| (2.0 * s).powf(1.0 / b) * libm::tgamma(1.0 + 1.0 / b);
        let p_left = mass(left) / (mass(left) + mass(right));
        (0..n)
            .map(|_| {
                let (sign, (b, s)) = if rng.gen::<f64>() < p_left { (-1.0, left) } else { (1.0, right) };
                let g: f64 = Gamma::new(1.0 / b, 1.0).unwrap().sample(&mut rng);
                center + sign * (2.0 * s * g).powf(1.0 / b)
            })
            .collect()
    }

    use rand::distributions::Distribution;

    #[test]
    fn piece_scaling_preserves_mass() {
        let quad = QuadratureSpec::default();
        let fit = PiecewiseExpFit {
            level: 3,
            split: 0.1,
            left: ExpPiece {
                amplitude: 1.0,
                location: 0.05,
                shape: 1.3,
                spread: 0.02,
            },
            right: ExpPiece {
                amplitude: 1.2,
                location: 0.12,
                shape: 2.4,
                spread: 0.01,
            },
            sample_count: 0,
            r_squared: 1.0,
            density_gap: 0.0,
        }
        .normalized(&quad)
        .unwrap();
        assert!((fit.mass(&quad).unwrap() - 1.0).abs() < 1e-10);
        let s = fit.scaled(2.5);
        assert!((s.mass(&quad).unwrap() - 1.0).abs() < 1e-10);
        assert!((s.pdf(0.7 * 2.5) * 2.5 - fit.pdf(0.7)).abs() < 1e-12);
        let m = fit.mirrored();
        for y in [-0.3, -0.05, 0.0, 0.08, 0.2] {
            assert_eq!(m.pdf(-y), fit.pdf(y));
        }
        assert_eq!(m.level, -3);
    }

    #[test]
    fn split_evaluates_larger_piece() {
        let fit = PiecewiseExpFit {
            level: 1,
            split: 0.0,
            left: ExpPiece {
                amplitude: 2.0,
                location: 0.0,
                shape: 2.0,
                spread: 1.0,
            },
            right: ExpPiece {
                amplitude: 1.5,
                location: 0.0,
                shape: 2.0,
                spread: 1.0,
            },
            sample_count: 0,
            r_squared: 1.0,
            density_gap: 0.0,
        };
        assert_eq!(clip_noise_pdf(0.0, &fit), 2.0);
        assert_eq!(clip_noise_pdf(1e-12, &fit), fit.right.density(1e-12));
    }

    #[test]
    fn recovers_gaussian() {
        let sigma = 0.3;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<f64> = (0..1_000_000)
            .map(|_| 0.2 + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let quad = QuadratureSpec::default();
        let fit = fit_piecewise_exp(&samples, 1, &quad).unwrap();
        for p in [fit.left, fit.right] {
            assert!((1.9..=2.1).contains(&p.shape), "{p:?}");
            // each side sees only half the peak, so location trades off against shape
            assert!((p.location - 0.2).abs() < 0.15 * sigma, "{p:?}");
        }
        for i in -30..=30 {
            let y = 0.2 + sigma * i as f64 / 10.0;
            let want = (-(y - 0.2f64).powi(2) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
            let got = clip_noise_pdf(y, &fit);
            assert!((got / want - 1.0).abs() < 0.05, "y = {y}: {got} vs {want}");
        }
        assert!((fit.mass(&quad).unwrap() - 1.0).abs() < 1e-6);
        assert!(fit.r_squared > 0.99);
        assert!(fit.density_gap < 0.05);
    }

    #[test]
    fn recovers_asymmetric_generalized_gaussian() {
        let (left, right) = ((1.5, 0.05), (2.5, 0.02));
        let samples = two_sided(2_000_000, -0.1, left, right, 5);
        let fit = fit_piecewise_exp(&samples, 5, &QuadratureSpec::default()).unwrap();
        let close = |got: f64, want: f64| (got / want - 1.0).abs() < 0.05;
        assert!(close(fit.left.shape, left.0) && close(fit.left.spread, left.1), "{:?}", fit.left);
        assert!(close(fit.right.shape, right.0) && close(fit.right.spread, right.1), "{:?}", fit.right);
        assert!((fit.left.location + 0.1).abs() < 0.01 && (fit.right.location + 0.1).abs() < 0.01);
    }

    #[test]
    fn too_few_samples() {
        let e = fit_piecewise_exp(&vec![0.0; 100], 1, &QuadratureSpec::default()).unwrap_err();
        assert!(matches!(e, Error::InsufficientData(_)));
        let flat = vec![0.25; MIN_FIT_SAMPLES];
        assert!(matches!(
            fit_piecewise_exp(&flat, 1, &QuadratureSpec::default()),
            Err(Error::FitFailure(_))
        ));
    }
}
