//! Probabilistically shaped 64QAM viewed as two independent shaped 8PAM
//! rails: Maxwell–Boltzmann amplitude distributions, entropy accounting, the
//! symbol-power/spacing relation and the Gray labelling of the 8 levels.

use num_complex::Complex;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::bisect;

/// Amplitude magnitudes of one 8PAM rail, in units of the half-spacing `d`.
pub const MAGNITUDES: [i32; 4] = [1, 3, 5, 7];

/// The eight signed levels in ascending order.
pub const LEVELS: [i32; 8] = [-7, -5, -3, -1, 1, 3, 5, 7];

/// Largest spectral efficiency of 64QAM (bits per 2D symbol).
pub const SE_MAX: f64 = 6.0;
/// Smallest spectral efficiency reachable with a sign-symmetric 8PAM rail:
/// only the sign bit carries information.
pub const SE_MIN: f64 = 2.0;

const SE_SLACK: f64 = 1e-12;

/// Sign-symmetric distribution over the 8PAM levels.
///
/// `probs[j]` is the probability of level `+MAGNITUDES[j]` (and equally of
/// `-MAGNITUDES[j]`), so the four entries sum to one half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeDistribution {
    pub probs: [f64; 4],
    /// Maxwell–Boltzmann rate; infinite for the sign-only distribution.
    pub lambda: f64,
    /// Spectral efficiency per 2D symbol the distribution was built for.
    pub target_se: f64,
}

impl AmplitudeDistribution {
    /// Builds a distribution from per-sign probabilities and checks it.
    pub fn from_probs(probs: [f64; 4]) -> Result<Self> {
        let d = Self {
            probs,
            lambda: f64::NAN,
            target_se: f64::NAN,
        };
        d.validate()?;
        let h = entropy(&d);
        Ok(Self { target_se: 2.0 * h, ..d })
    }

    pub fn uniform() -> Self {
        Self {
            probs: [0.125; 4],
            lambda: 0.0,
            target_se: SE_MAX,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter(format!("negative or non-finite probability in {:?}", self.probs)));
        }
        let total: f64 = self.probs.iter().sum();
        if (2.0 * total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "signed level probabilities must sum to 1, got {}",
                2.0 * total
            )));
        }
        Ok(())
    }

    /// Probability of a signed level.
    pub fn prob_of(&self, level: i32) -> f64 {
        match MAGNITUDES.iter().position(|&m| m == level.abs()) {
            Some(j) if level % 2 != 0 => self.probs[j],
            _ => 0.0,
        }
    }

    /// Mean square amplitude of one rail in `d^2` units: `2 * sum k^2 Pr_k`.
    pub fn rail_power(&self) -> f64 {
        2.0 * MAGNITUDES
            .iter()
            .zip(self.probs.iter())
            .map(|(&k, &p)| (k * k) as f64 * p)
            .sum::<f64>()
    }

    /// Bits per real dimension.
    pub fn entropy_per_dimension(&self) -> f64 {
        entropy(self)
    }

    /// Per-sign probabilities as signed-level weights in `LEVELS` order.
    pub fn level_weights(&self) -> [f64; 8] {
        let mut w = [0.0; 8];
        for (i, &l) in LEVELS.iter().enumerate() {
            w[i] = self.prob_of(l);
        }
        w
    }
}

fn mb_probs(lambda: f64) -> [f64; 4] {
    // weights relative to the innermost level so large rates do not underflow
    let w: Vec<f64> = MAGNITUDES
        .iter()
        .map(|&k| (-lambda * ((k * k - 1) as f64)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    [
        0.5 * w[0] / total,
        0.5 * w[1] / total,
        0.5 * w[2] / total,
        0.5 * w[3] / total,
    ]
}

/// Entropy in bits per dimension: `-sum p log2 p` over the eight signed levels.
pub fn entropy(dist: &AmplitudeDistribution) -> f64 {
    -2.0 * dist
        .probs
        .iter()
        .filter(|p| **p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Maxwell–Boltzmann distribution whose two rails together carry `target_se`
/// bits per 2D symbol.
pub fn mb_distribution_for_se(target_se: f64) -> Result<AmplitudeDistribution> {
    if !(target_se > 0.0) || !target_se.is_finite() {
        return Err(Error::InvalidParameter(format!("spectral efficiency must be positive, got {target_se}")));
    }
    if target_se > SE_MAX + SE_SLACK {
        return Err(Error::Infeasible(format!(
            "spectral efficiency {target_se} exceeds the 64QAM maximum of {SE_MAX}"
        )));
    }
    if target_se < SE_MIN - SE_SLACK {
        return Err(Error::Infeasible(format!(
            "spectral efficiency {target_se} is below {SE_MIN}, the sign-bit floor of shaped 64QAM"
        )));
    }
    if target_se >= SE_MAX - SE_SLACK {
        return Ok(AmplitudeDistribution {
            target_se,
            ..AmplitudeDistribution::uniform()
        });
    }
    if target_se <= SE_MIN + SE_SLACK {
        return Ok(AmplitudeDistribution {
            probs: [0.5, 0.0, 0.0, 0.0],
            lambda: f64::INFINITY,
            target_se,
        });
    }
    let target_h = target_se / 2.0;
    let h_of = |lambda: f64| -2.0 * mb_probs(lambda).iter().filter(|p| **p > 0.0).map(|&p| p * p.log2()).sum::<f64>();
    let mut hi = 1.0;
    while h_of(hi) > target_h {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Infeasible(format!("cannot reach entropy {target_h}")));
        }
    }
    let lambda = bisect(|l| h_of(l) - target_h, 0.0, hi, 1e-15 * hi.max(1.0))?;
    Ok(AmplitudeDistribution {
        probs: mb_probs(lambda),
        lambda,
        target_se,
    })
}

/// Half-spacing `d` of the level grid that gives 2D average power `p_sym`.
pub fn euclidean_distance(p_sym: f64, dist: &AmplitudeDistribution) -> Result<f64> {
    if !(p_sym > 0.0) || !p_sym.is_finite() {
        return Err(Error::InvalidParameter(format!("symbol power must be positive, got {p_sym}")));
    }
    dist.validate()?;
    let denom = 4.0
        * MAGNITUDES
            .iter()
            .zip(dist.probs.iter())
            .map(|(&k, &p)| (k * k) as f64 * p)
            .sum::<f64>();
    Ok((p_sym / denom).sqrt())
}

/// Gray labels of the eight levels, bit 1 as the most significant bit.
///
/// Bit 1 is the sign, bit 2 flags `|r| > 4d`, bit 3 flags `2d < |r| < 6d`.
pub const GRAY_TABLE: [(i32, u8); 8] = [
    (-7, 0b010),
    (-5, 0b011),
    (-3, 0b001),
    (-1, 0b000),
    (1, 0b100),
    (3, 0b101),
    (5, 0b111),
    (7, 0b110),
];

/// 3-bit Gray word of a signed level.
pub fn gray_bits(amplitude: i32) -> Result<u8> {
    GRAY_TABLE
        .iter()
        .find(|(a, _)| *a == amplitude)
        .map(|(_, b)| *b)
        .ok_or_else(|| Error::InvalidParameter(format!("{amplitude} is not an 8PAM level")))
}

/// Value (0 or 1) of bit `bit` (1-based, 1 = MSB) in a Gray word.
#[inline]
pub fn label_bit(word: u8, bit: usize) -> u8 {
    (word >> (3 - bit)) & 1
}

/// Hard decision on a received rail value expressed in `d` units.
#[inline]
pub fn decide_level(r: f64) -> i32 {
    let idx = ((r + 8.0) / 2.0).floor().clamp(0.0, 7.0) as i32;
    2 * idx - 7
}

/// Decision cell `[lo, hi)` of a level, in `d` units.
fn decision_cell(level: i32) -> (f64, f64) {
    let lo = if level == -7 { f64::NEG_INFINITY } else { (level - 1) as f64 };
    let hi = if level == 7 { f64::INFINITY } else { (level + 1) as f64 };
    (lo, hi)
}

/// Noise intervals (in `d` units, relative to the transmitted level) that
/// flip bit `bit` of the transmitted level, enumerated from the decision
/// cells and merged where adjacent.
pub fn gray_error_regions(level: i32, bit: usize) -> Result<Vec<(f64, f64)>> {
    if !(1..=3).contains(&bit) {
        return Err(Error::InvalidParameter(format!("bit index {bit} outside 1..=3")));
    }
    let sent = label_bit(gray_bits(level)?, bit);
    let mut regions: Vec<(f64, f64)> = Vec::new();
    for &cell in &LEVELS {
        if label_bit(gray_bits(cell)?, bit) == sent {
            continue;
        }
        let (lo, hi) = decision_cell(cell);
        let (lo, hi) = (lo - level as f64, hi - level as f64);
        match regions.last_mut() {
            Some(last) if last.1 == lo => last.1 = hi,
            _ => regions.push((lo, hi)),
        }
    }
    Ok(regions)
}

/// Draws signed levels for one rail.
#[derive(Debug, Clone)]
pub struct LevelSampler {
    index: WeightedIndex<f64>,
}

impl LevelSampler {
    pub fn new(dist: &AmplitudeDistribution) -> Result<Self> {
        dist.validate()?;
        let index = WeightedIndex::new(dist.level_weights())
            .map_err(|e| Error::InvalidParameter(format!("bad level weights: {e}")))?;
        Ok(Self { index })
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> i32 {
        LEVELS[self.index.sample(rng)]
    }
}

/// `count` i.i.d. complex symbols on the odd-integer grid with independent
/// rails drawn from `dist`.
pub fn sample_symbols(dist: &AmplitudeDistribution, count: usize, seed: u64) -> Result<Vec<Complex<f64>>> {
    let sampler = LevelSampler::new(dist)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let re = sampler.draw(&mut rng) as f64;
            let im = sampler.draw(&mut rng) as f64;
            Complex::new(re, im)
        })
        .collect())
}
