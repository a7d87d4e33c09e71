//! Closed-form clipping model: attenuation, clipping-noise power, effective
//! SNR per leaf and the capacity limit of a peak-constrained DSCM link.
//!
//! Conventions shared with the simulator:
//! * `dscm_power` is the total complex average power of the multiplexed
//!   waveform; each real dimension carries half of it.
//! * The clipping ratio `eta` is `A / sqrt(dscm_power)` where `A` is the peak
//!   envelope of the clipped waveform. In-phase and quadrature rails are each
//!   hard-limited at `A / sqrt 2 = eta * sqrt(dscm_power / 2)`, so every rail
//!   sees the per-dimension Gaussian model with the same `eta`.
//! * `peak_amplitude` is the envelope peak allowed by the transmitter; the
//!   matching coefficient is `beta = peak_amplitude / A`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{golden_section_max, q_function};

/// Converts a clipping ratio in dB into the linear `eta`.
#[inline]
pub fn ratio_db_to_eta(ratio_db: f64) -> f64 {
    10f64.powf(ratio_db / 20.0)
}

#[inline]
pub fn eta_to_ratio_db(eta: f64) -> f64 {
    20.0 * eta.log10()
}

/// How `LinkProfile::noise_variance` maps onto the noise seen by one
/// subcarrier after matched filtering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseReference {
    /// The variance is already the complex noise variance per subcarrier
    /// symbol.
    PerSubcarrier,
    /// The variance is per complex sample of a full-band waveform sampled at
    /// `oversampling * N * B`; one subcarrier collects `1 / (oversampling * N)`
    /// of it.
    PerSample { oversampling: f64 },
}

/// One hub-to-leaves network instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkProfile {
    /// Linear power ratios (>= 1), one per subcarrier/leaf.
    pub losses: Vec<f64>,
    /// White-noise variance, interpreted through `noise_reference`.
    pub noise_variance: f64,
    pub noise_reference: NoiseReference,
    /// Envelope peak allowed at the transmitter (amplitude units).
    pub peak_amplitude: f64,
    /// Average complex power of the DSCM waveform before peak matching.
    #[serde(default = "unit_power")]
    pub dscm_power: f64,
    /// Per-subcarrier bandwidth in Hz, equal to the symbol rate.
    pub subcarrier_bandwidth: f64,
}

fn unit_power() -> f64 {
    1.0
}

impl LinkProfile {
    pub fn new(
        losses: Vec<f64>,
        noise_variance: f64,
        noise_reference: NoiseReference,
        peak_amplitude: f64,
        subcarrier_bandwidth: f64,
    ) -> Result<Self> {
        let p = Self {
            losses,
            noise_variance,
            noise_reference,
            peak_amplitude,
            dscm_power: 1.0,
            subcarrier_bandwidth,
        };
        p.validate()?;
        Ok(p)
    }

    /// Eight leaves with losses between 1 and 6.53, noise variance 0.0237
    /// referenced to a 3x-oversampled full-band waveform, peak 2.579 and
    /// 8 GBd subcarriers.
    pub fn eight_leaf_reference() -> Self {
        Self {
            losses: vec![1.0, 1.33, 1.74, 2.32, 3.05, 4.03, 5.25, 6.53],
            noise_variance: 0.0237,
            noise_reference: NoiseReference::PerSample { oversampling: 3.0 },
            peak_amplitude: 2.579,
            dscm_power: 1.0,
            subcarrier_bandwidth: 8e9,
        }
    }

    pub fn subcarrier_count(&self) -> usize {
        self.losses.len()
    }

    /// Complex white-noise variance per received subcarrier symbol.
    pub fn subcarrier_noise_variance(&self) -> f64 {
        match self.noise_reference {
            NoiseReference::PerSubcarrier => self.noise_variance,
            NoiseReference::PerSample { oversampling } => {
                self.noise_variance / (oversampling * self.subcarrier_count() as f64)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.losses.is_empty() {
            return Err(Error::InvalidParameter("profile needs at least one subcarrier loss".into()));
        }
        if let Some(l) = self.losses.iter().find(|l| !(**l >= 1.0) || !l.is_finite()) {
            return Err(Error::InvalidParameter(format!("link loss must be a finite linear ratio >= 1, got {l}")));
        }
        for (name, v) in [
            ("noise_variance", self.noise_variance),
            ("peak_amplitude", self.peak_amplitude),
            ("dscm_power", self.dscm_power),
            ("subcarrier_bandwidth", self.subcarrier_bandwidth),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if let NoiseReference::PerSample { oversampling } = self.noise_reference {
            if !(oversampling > 0.0) || !oversampling.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "noise oversampling must be positive, got {oversampling}"
                )));
            }
        }
        Ok(())
    }
}

/// Derived clipping quantities at one clipping ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClippingAnalysis {
    pub ratio_db: f64,
    pub eta: f64,
    /// Peak envelope `A = eta * sqrt(dscm_power)` before peak matching.
    pub clip_amplitude: f64,
    pub alpha: f64,
    pub clip_noise_power: f64,
    pub matching_coefficient: f64,
    pub esnr_per_subcarrier: Vec<f64>,
    pub capacity_bps: f64,
}

impl ClippingAnalysis {
    pub fn new(profile: &LinkProfile, ratio_db: f64) -> Result<Self> {
        let mut a = Self::at_eta(profile, ratio_db_to_eta(ratio_db))?;
        a.ratio_db = ratio_db;
        Ok(a)
    }

    pub fn at_eta(profile: &LinkProfile, eta: f64) -> Result<Self> {
        profile.validate()?;
        check_eta(eta)?;
        let ratio_db = eta_to_ratio_db(eta);
        let alpha = clipping_attenuation(eta)?;
        let clip_noise_power = clipping_noise_power(eta, profile.dscm_power)?;
        let clip_amplitude = eta * profile.dscm_power.sqrt();
        let beta = profile.peak_amplitude / clip_amplitude;
        let esnr: Vec<f64> = profile
            .losses
            .iter()
            .map(|&loss| esnr_formula(alpha, beta, clip_noise_power, profile, loss))
            .collect();
        let capacity_bps = profile.subcarrier_bandwidth * esnr.iter().map(|e| (1.0 + e).log2()).sum::<f64>();
        Ok(Self {
            ratio_db,
            eta,
            clip_amplitude,
            alpha,
            clip_noise_power,
            matching_coefficient: beta,
            esnr_per_subcarrier: esnr,
            capacity_bps,
        })
    }

    /// Average complex power of one subcarrier's symbols at the receiver of a
    /// leaf with the given loss: `alpha^2 beta^2 P / (N loss)`.
    pub fn received_symbol_power(&self, profile: &LinkProfile, loss: f64) -> f64 {
        let ab = self.alpha * self.matching_coefficient;
        ab * ab * profile.dscm_power / (profile.subcarrier_count() as f64 * loss)
    }

    /// Clipping-noise variance per real dimension relative to the
    /// per-dimension signal power of one subcarrier.
    pub fn clip_noise_to_signal(&self, profile: &LinkProfile) -> f64 {
        self.clip_noise_power / (self.alpha * self.alpha * profile.dscm_power)
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParameter(format!("clipping ratio eta must be finite and >= 0, got {eta}")));
    }
    Ok(())
}

/// `alpha = 1 - 2 Q(eta)`.
pub fn clipping_attenuation(eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(1.0 - 2.0 * q_function(eta))
}

/// Clipping-noise power of a Gaussian signal of power `p_dscm` hard-limited
/// at `eta` standard deviations.
pub fn clipping_noise_power(eta: f64, p_dscm: f64) -> Result<f64> {
    check_eta(eta)?;
    if !(p_dscm > 0.0) || !p_dscm.is_finite() {
        return Err(Error::InvalidParameter(format!("signal power must be positive, got {p_dscm}")));
    }
    let q = q_function(eta);
    let tail = eta / (2.0 * PI).sqrt() * (-0.5 * eta * eta).exp();
    let pc = 2.0 * p_dscm * (q * (1.0 + eta * eta - 2.0 * q) - tail);
    Ok(pc.max(0.0))
}

fn esnr_formula(alpha: f64, beta: f64, pc: f64, profile: &LinkProfile, loss: f64) -> f64 {
    let n = profile.subcarrier_count() as f64;
    let num = alpha * alpha * beta * beta * profile.dscm_power;
    let den = beta * beta * pc + n * loss * profile.subcarrier_noise_variance();
    num / den
}

/// Effective SNR (linear) of subcarrier `index` (zero based).
pub fn effective_snr(eta: f64, profile: &LinkProfile, index: usize) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    profile.validate()?;
    let loss = *profile.losses.get(index).ok_or(Error::InvalidIndex {
        index,
        len: profile.subcarrier_count(),
    })?;
    let alpha = clipping_attenuation(eta)?;
    let pc = clipping_noise_power(eta, profile.dscm_power)?;
    let beta = profile.peak_amplitude / (eta * profile.dscm_power.sqrt());
    Ok(esnr_formula(alpha, beta, pc, profile, loss))
}

/// Sum-rate capacity `B * sum log2(1 + ESNR_i)` in bit/s.
pub fn capacity(eta: f64, profile: &LinkProfile) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    Ok(ClippingAnalysis::at_eta(profile, eta)?.capacity_bps)
}

/// Capacity curve over a list of clipping ratios in dB.
pub fn capacity_sweep(profile: &LinkProfile, ratios_db: &[f64]) -> Result<Vec<ClippingAnalysis>> {
    ratios_db.iter().map(|&r| ClippingAnalysis::new(profile, r)).collect()
}

/// Clipping ratio (dB) maximizing capacity on `[lo_db, hi_db]`.
///
/// Scans a grid of `step_db`, then refines around the best grid point with a
/// golden-section search to 0.01 dB. Ties go to the larger ratio.
pub fn optimal_clipping_ratio(
    profile: &LinkProfile,
    lo_db: f64,
    hi_db: f64,
    step_db: f64,
) -> Result<(f64, ClippingAnalysis)> {
    if !(lo_db < hi_db) || !(step_db > 0.0) || !lo_db.is_finite() || !hi_db.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "empty clipping-ratio grid [{lo_db}, {hi_db}] step {step_db}"
        )));
    }
    profile.validate()?;
    let steps = ((hi_db - lo_db) / step_db + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|i| lo_db + i as f64 * step_db).collect();
    if hi_db - grid[grid.len() - 1] > 1e-9 {
        grid.push(hi_db);
    }
    let cap_at = |r: f64| ClippingAnalysis::new(profile, r).map(|a| a.capacity_bps);
    let mut best = (grid[0], f64::NEG_INFINITY);
    for &r in &grid {
        let c = cap_at(r)?;
        if c >= best.1 {
            best = (r, c);
        }
    }
    let lo = (best.0 - step_db).max(lo_db);
    let hi = (best.0 + step_db).min(hi_db);
    let (refined, c_refined) = golden_section_max(|r| cap_at(r).unwrap_or(f64::NEG_INFINITY), lo, hi, 0.01);
    let ratio = if c_refined >= best.1 { refined } else { best.0 };
    Ok((ratio, ClippingAnalysis::new(profile, ratio)?))
}
