//! Clipping-noise statistics conditioned on the transmitted level, the
//! density of clipping plus white noise, and the resulting theoretical BER.
//!
//! A piecewise [`NoiseModel`] holds fitted densities at several reference
//! spectral efficiencies. Conditional clipping noise scales with the rms
//! amplitude of the rail, so a fit made at one SE is carried to a nearby SE by
//! the ratio of rail rms values; the BER at an arbitrary SE is interpolated in
//! the log domain between the two bracketing references.

mod ber;
mod fit;

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clipping::{clipping_attenuation, clipping_noise_power, ratio_db_to_eta, LinkProfile};
use crate::error::{Error, Result};
use crate::math::QuadratureSpec;
use crate::shaping::{euclidean_distance, mb_distribution_for_se, AmplitudeDistribution, MAGNITUDES};
use crate::sim::{DscmSimulator, WaveformConfig};

pub use ber::{
    bit_error_ratios, bit_error_ratios_with, collapsed_bit_error_ratios, combined_pdf, lower_tail, published_regions,
    region_discrepancies, region_probability, total_ber, upper_tail, ClipNoiseSet, LevelNoise, RegionDiscrepancy,
    RegionSource,
};
pub use fit::{
    clip_noise_pdf, fit_piecewise_exp, ExpPiece, PiecewiseExpFit, HISTOGRAM_BINS, MIN_BIN_COUNT, MIN_FIT_SAMPLES,
    SHAPE_RANGE,
};

const FORMAT_TAG: &str = "dscm-noise-model";
const FORMAT_VERSION: u32 = 1;

/// How the clipping noise is represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModelKind {
    /// Fitted piecewise power-exponential densities per level.
    Piecewise,
    /// A zero-mean Gaussian with the closed-form clipping-noise variance,
    /// identical for every level.
    Gaussian,
}

/// Fit of one magnitude at a reference SE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelFit {
    pub fit: PiecewiseExpFit,
    /// Reference SE whose samples produced the fit; differs from the owning
    /// reference when too few samples were available there.
    pub source_se: f64,
}

/// Fits for magnitudes 1, 3, 5, 7 at one reference SE, in that SE's `d`
/// units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceFits {
    pub se: f64,
    /// Symmetry check: largest standardized gap between `+k` and mirrored
    /// `-k` sample means.
    pub symmetry_z: f64,
    pub levels: Vec<LevelFit>,
}

impl ReferenceFits {
    fn clip_noise_set(&self) -> ClipNoiseSet {
        let get = |j: usize| LevelNoise::Piecewise(self.levels[j].fit.clone());
        ClipNoiseSet {
            magnitudes: [get(0), get(1), get(2), get(3)],
        }
    }
}

/// Conditional clipping-noise model at one clipping ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub format: String,
    pub version: u32,
    pub kind: NoiseModelKind,
    pub clip_ratio_db: f64,
    pub dscm_power: f64,
    /// Fits and noise are expressed in units of the half-spacing `d`.
    pub d_units: bool,
    /// Ascending in SE; empty for the Gaussian kind.
    #[serde(default)]
    pub references: Vec<ReferenceFits>,
}

/// Settings for harvesting clipping noise from the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionPlan {
    pub reference_ses: Vec<f64>,
    /// Samples wanted for each magnitude whose probability is at least
    /// `min_probability`.
    pub target_samples: usize,
    pub min_probability: f64,
    /// Blocks simulated per round until the targets are met.
    pub blocks_per_round: usize,
    pub max_blocks: usize,
}

impl Default for ExtractionPlan {
    fn default() -> Self {
        Self {
            reference_ses: (0..=8).map(|i| 2.0 + 0.5 * i as f64).collect(),
            target_samples: 400_000,
            min_probability: 0.01,
            blocks_per_round: 16,
            max_blocks: 256,
        }
    }
}

impl ExtractionPlan {
    pub fn validate(&self) -> Result<()> {
        if self.reference_ses.is_empty() {
            return Err(Error::Config("at least one reference SE is required".into()));
        }
        if self.reference_ses.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("reference SEs must be strictly ascending".into()));
        }
        for &s in &self.reference_ses {
            mb_distribution_for_se(s)?;
        }
        if self.blocks_per_round == 0 || self.max_blocks < self.blocks_per_round {
            return Err(Error::Config("need blocks_per_round >= 1 and max_blocks >= blocks_per_round".into()));
        }
        if !(self.min_probability > 0.0 && self.min_probability < 0.5) {
            return Err(Error::Config("min_probability must lie in (0, 0.5)".into()));
        }
        Ok(())
    }
}

/// Rms amplitude of one rail in `d` units.
fn rail_rms(dist: &AmplitudeDistribution) -> f64 {
    dist.rail_power().sqrt()
}

impl NoiseModel {
    /// Level-independent Gaussian clipping noise with the closed-form
    /// variance.
    pub fn gaussian(clip_ratio_db: f64, dscm_power: f64) -> Result<Self> {
        let m = Self {
            format: FORMAT_TAG.into(),
            version: FORMAT_VERSION,
            kind: NoiseModelKind::Gaussian,
            clip_ratio_db,
            dscm_power,
            d_units: true,
            references: Vec::new(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn piecewise(clip_ratio_db: f64, dscm_power: f64, references: Vec<ReferenceFits>) -> Result<Self> {
        let m = Self {
            format: FORMAT_TAG.into(),
            version: FORMAT_VERSION,
            kind: NoiseModelKind::Piecewise,
            clip_ratio_db,
            dscm_power,
            d_units: true,
            references,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != FORMAT_TAG || self.version != FORMAT_VERSION {
            return Err(Error::Consistency(format!(
                "unsupported noise model format {} v{}",
                self.format, self.version
            )));
        }
        if !self.clip_ratio_db.is_finite() || !(self.dscm_power > 0.0) {
            return Err(Error::InvalidParameter("noise model needs a finite ratio and positive power".into()));
        }
        if self.kind == NoiseModelKind::Piecewise {
            if self.references.is_empty() {
                return Err(Error::InvalidParameter("piecewise noise model has no references".into()));
            }
            if self.references.windows(2).any(|w| !(w[0].se < w[1].se)) {
                return Err(Error::InvalidParameter("reference SEs must be ascending".into()));
            }
            for r in &self.references {
                if r.levels.len() != 4 {
                    return Err(Error::InvalidParameter(format!("reference {} needs 4 level fits", r.se)));
                }
                for (lf, &k) in r.levels.iter().zip(&MAGNITUDES) {
                    if lf.fit.level != k {
                        return Err(Error::InvalidParameter(format!("reference {}: fit for level {k} missing", r.se)));
                    }
                    lf.fit.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Clipping noise per rail in `d` units for a Gaussian model at `se`.
    fn gaussian_std(&self, dist: &AmplitudeDistribution) -> Result<f64> {
        let eta = ratio_db_to_eta(self.clip_ratio_db);
        let alpha = clipping_attenuation(eta)?;
        let pc = clipping_noise_power(eta, self.dscm_power)?;
        Ok(rail_rms(dist) * (pc / (alpha * alpha * self.dscm_power)).sqrt())
    }

    /// Clipping-noise sets at `se` with their log-interpolation weights.
    pub fn clip_noise_at(&self, se: f64) -> Result<Vec<(f64, ClipNoiseSet)>> {
        let dist = mb_distribution_for_se(se)?;
        match self.kind {
            NoiseModelKind::Gaussian => Ok(vec![(1.0, ClipNoiseSet::gaussian(self.gaussian_std(&dist)?))]),
            NoiseModelKind::Piecewise => {
                let refs = &self.references;
                let carry = |r: &ReferenceFits| -> Result<ClipNoiseSet> {
                    let c = rail_rms(&dist) / rail_rms(&mb_distribution_for_se(r.se)?);
                    Ok(r.clip_noise_set().scaled(c))
                };
                let upper = refs.iter().position(|r| r.se >= se);
                match upper {
                    None => Ok(vec![(1.0, carry(refs.last().unwrap())?)]),
                    Some(0) => Ok(vec![(1.0, carry(&refs[0])?)]),
                    Some(i) if refs[i].se == se => Ok(vec![(1.0, carry(&refs[i])?)]),
                    Some(i) => {
                        let (a, b) = (&refs[i - 1], &refs[i]);
                        let w = (se - a.se) / (b.se - a.se);
                        Ok(vec![(1.0 - w, carry(a)?), (w, carry(b)?)])
                    }
                }
            }
        }
    }

    /// Serializes to the documented TOML layout.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize noise model: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text).map_err(|e| Error::Config(format!("invalid noise model: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(detail) => Error::Format {
                path: path.to_path_buf(),
                detail,
            },
            other => other,
        })
    }

    /// SHA-256 of the serialized model, hex encoded.
    pub fn content_hash(&self) -> Result<String> {
        Ok(hex(&Sha256::digest(self.to_toml()?.as_bytes())))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Link-level quantities that fix the white-noise and spacing scale of one
/// leaf at one clipping ratio.
fn white_sigma_d(se: f64, loss: f64, eta: f64, profile: &LinkProfile) -> Result<(AmplitudeDistribution, f64)> {
    if !(loss > 0.0) || !loss.is_finite() {
        return Err(Error::InvalidParameter(format!("loss must be positive, got {loss}")));
    }
    let dist = mb_distribution_for_se(se)?;
    let alpha = clipping_attenuation(eta)?;
    let beta = profile.peak_amplitude / (eta * profile.dscm_power.sqrt());
    let n = profile.subcarrier_count() as f64;
    let p_sym = alpha * alpha * beta * beta * profile.dscm_power / (n * loss);
    let d = euclidean_distance(p_sym, &dist)?;
    let sigma = (0.5 * profile.subcarrier_noise_variance()).sqrt() / d;
    Ok((dist, sigma))
}

/// BER averaged over the three bits of a rail, for a leaf with linear `loss`
/// carrying `se` at clipping ratio `eta`.
pub fn theoretical_ber(
    se: f64,
    loss: f64,
    eta: f64,
    profile: &LinkProfile,
    model: &NoiseModel,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !model.d_units {
        return Err(Error::Consistency("noise model is not expressed in d units".into()));
    }
    let model_eta = ratio_db_to_eta(model.clip_ratio_db);
    if (model_eta / eta - 1.0).abs() > 1e-9 {
        return Err(Error::Consistency(format!(
            "noise model fitted at {} dB used at eta {eta}",
            model.clip_ratio_db
        )));
    }
    let (dist, sigma) = white_sigma_d(se, loss, eta, profile)?;
    let parts = model.clip_noise_at(se)?;
    if parts.len() == 1 {
        return Ok(total_ber(&bit_error_ratios(&dist, sigma, &parts[0].1, quad)?));
    }
    let mut log_sum = 0.0;
    for (w, set) in &parts {
        let b = total_ber(&bit_error_ratios(&dist, sigma, set, quad)?);
        log_sum += w * b.max(f64::MIN_POSITIVE).ln();
    }
    Ok(log_sum.exp())
}

/// Progress of one reference SE during extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSummary {
    pub se: f64,
    pub blocks: usize,
    /// Mirrored sample counts for magnitudes 1, 3, 5, 7.
    pub samples: [usize; 4],
    /// Coefficient of determination of each own fit; `None` when borrowed.
    pub r_squared: [Option<f64>; 4],
}

/// Simulates each reference SE (all subcarriers at that SE), harvests
/// clipping noise at `clip_ratio_db` and fits every magnitude with enough
/// samples. Magnitudes without enough samples borrow the fit of the nearest
/// reference that has one.
pub fn fit_noise_model(
    profile: &LinkProfile,
    wf: &WaveformConfig,
    clip_ratio_db: f64,
    plan: &ExtractionPlan,
    quad: &QuadratureSpec,
) -> Result<(NoiseModel, Vec<ExtractionSummary>)> {
    plan.validate()?;
    let n = profile.subcarrier_count();
    let mut own: Vec<[Option<PiecewiseExpFit>; 4]> = Vec::new();
    let mut symmetry = Vec::new();
    let mut summaries = Vec::new();
    for &se in &plan.reference_ses {
        let sim = DscmSimulator::new(profile, &vec![se; n], wf)?;
        let dist = mb_distribution_for_se(se)?;
        let wanted: Vec<usize> = (0..4).filter(|&j| 2.0 * dist.probs[j] >= plan.min_probability).collect();
        let mut samples = crate::sim::ConditionedNoiseSamples {
            clip_ratio_db,
            ..Default::default()
        };
        let mut blocks = 0;
        loop {
            let next = (blocks + plan.blocks_per_round).min(plan.max_blocks);
            let part = sim.extract_blocks(clip_ratio_db, blocks..next)?;
            for (a, b) in samples.by_level.iter_mut().zip(part.by_level) {
                a.extend(b);
            }
            blocks = next;
            let done = wanted
                .iter()
                .all(|&j| mirrored_count(&samples, MAGNITUDES[j]) >= plan.target_samples);
            if done || blocks >= plan.max_blocks {
                break;
            }
        }
        let mut fits: [Option<PiecewiseExpFit>; 4] = Default::default();
        let mut counts = [0; 4];
        let mut r2 = [None; 4];
        for (j, &k) in MAGNITUDES.iter().enumerate() {
            let pooled = samples.mirrored(k)?;
            counts[j] = pooled.len();
            if pooled.len() >= MIN_FIT_SAMPLES {
                let f = fit_piecewise_exp(&pooled, k, quad)?;
                r2[j] = Some(f.r_squared);
                fits[j] = Some(f);
            }
        }
        symmetry.push(samples.symmetry_z_score());
        own.push(fits);
        summaries.push(ExtractionSummary {
            se,
            blocks,
            samples: counts,
            r_squared: r2,
        });
    }
    let ses = &plan.reference_ses;
    let mut references = Vec::new();
    for (i, &se) in ses.iter().enumerate() {
        let mut levels = Vec::with_capacity(4);
        for (j, &k) in MAGNITUDES.iter().enumerate() {
            let donor = (0..ses.len())
                .filter(|&m| own[m][j].is_some())
                .min_by(|&a, &b| (ses[a] - se).abs().total_cmp(&(ses[b] - se).abs()).then(b.cmp(&a)))
                .ok_or_else(|| {
                    Error::InsufficientData(format!(
                        "no reference SE produced {MIN_FIT_SAMPLES} samples for level {k}"
                    ))
                })?;
            let fit = own[donor][j].clone().unwrap();
            let fit = if donor == i {
                fit
            } else {
                let c = rail_rms(&mb_distribution_for_se(se)?) / rail_rms(&mb_distribution_for_se(ses[donor])?);
                fit.scaled(c)
            };
            levels.push(LevelFit {
                fit,
                source_se: ses[donor],
            });
        }
        references.push(ReferenceFits {
            se,
            symmetry_z: symmetry[i],
            levels,
        });
    }
    Ok((NoiseModel::piecewise(clip_ratio_db, profile.dscm_power, references)?, summaries))
}

fn mirrored_count(s: &crate::sim::ConditionedNoiseSamples, k: i32) -> usize {
    s.level(k).map(|v| v.len()).unwrap_or(0) + s.level(-k).map(|v| v.len()).unwrap_or(0)
}

#[cfg(test)]
mod tests;
