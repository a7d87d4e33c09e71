//! BER look-up tables over (SE, loss) at one clipping ratio, and the greedy
//! per-leaf spectral-efficiency search that reads them.

mod io;
#[cfg(test)]
mod tests;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clipping::{optimal_clipping_ratio, ratio_db_to_eta, LinkProfile};
use crate::error::{Error, Result};
use crate::math::QuadratureSpec;
use crate::noise_model::{hex, theoretical_ber, NoiseModel, NoiseModelKind};
use crate::shaping::{SE_MAX, SE_MIN};

pub use io::{LUT_MAGIC, LUT_VERSION};

/// Slack allowed when a table is checked for monotonicity.
pub const MONOTONICITY_TOLERANCE: f64 = 1e-12;
/// Queries within this distance of a grid point snap onto it.
pub const SNAP_TOLERANCE: f64 = 1e-9;
/// Largest accepted gap between a table's clipping ratio and the optimum.
pub const RATIO_TOLERANCE_DB: f64 = 0.05;
/// Ratio at which clipping is negligible. Planning there stands in for a
/// transmitter that scales an unclipped waveform down to the peak limit.
pub const UNCLIPPED_RATIO_DB: f64 = 13.0;
/// Clipping-ratio bracket searched for the optimum, in dB.
pub const RATIO_SEARCH_DB: (f64, f64, f64) = (3.0, 13.0, 0.1);

/// BER over a rectangular (SE, loss) grid at one clipping ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct Lut3D {
    pub clip_ratio_db: f64,
    pub se_grid: Vec<f64>,
    pub loss_grid: Vec<f64>,
    /// Row-major: `ber[i * loss_grid.len() + j]` is at `(se_grid[i], loss_grid[j])`.
    pub ber: Vec<f64>,
    pub model_kind: NoiseModelKind,
    /// Content hash of the noise model the table was built from.
    pub model_hash: String,
}

fn check_grid(name: &str, grid: &[f64], lo: f64, hi: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter(format!("{name} grid is empty")));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter(format!("{name} grid must be strictly ascending")));
    }
    if let Some(v) = grid.iter().find(|&&v| !(v >= lo && v <= hi)) {
        return Err(Error::InvalidParameter(format!("{name} grid value {v} outside [{lo}, {hi}]")));
    }
    Ok(())
}

/// `lo, lo + step, ...` up to `hi`, stepping by whole multiples of `step`.
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!("bad grid [{lo}, {hi}] step {step}")));
    }
    let n = ((hi - lo) / step + SNAP_TOLERANCE).floor() as usize;
    Ok((0..=n).map(|i| round12(lo + i as f64 * step)).collect())
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// SE grid from `se_min` to the shaping maximum in steps of `delta_se`.
pub fn default_se_grid(se_min: f64, delta_se: f64) -> Result<Vec<f64>> {
    uniform_grid(se_min.max(SE_MIN), SE_MAX, delta_se)
}

/// The profile's own losses merged with a `step` grid from 1 up to the
/// largest of them, so every leaf lands exactly on a column.
pub fn default_loss_grid(profile: &LinkProfile, step: f64) -> Result<Vec<f64>> {
    profile.validate()?;
    let max = profile.losses.iter().copied().fold(1.0, f64::max);
    let mut grid = uniform_grid(1.0, max, step)?;
    grid.extend(profile.losses.iter().copied());
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= SNAP_TOLERANCE);
    Ok(grid)
}

/// Evaluates [`theoretical_ber`] on every grid cell at the model's ratio.
///
/// Fails with [`Error::Monotonicity`] if BER decreases by more than
/// [`MONOTONICITY_TOLERANCE`] along either axis.
pub fn build_lut(
    model: &NoiseModel,
    profile: &LinkProfile,
    se_grid: &[f64],
    loss_grid: &[f64],
    quad: &QuadratureSpec,
) -> Result<Lut3D> {
    profile.validate()?;
    check_grid("se", se_grid, SE_MIN, SE_MAX)?;
    check_grid("loss", loss_grid, f64::MIN_POSITIVE, f64::MAX)?;
    let eta = ratio_db_to_eta(model.clip_ratio_db);
    let cols = loss_grid.len();
    let ber = (0..se_grid.len() * cols)
        .into_par_iter()
        .map(|c| theoretical_ber(se_grid[c / cols], loss_grid[c % cols], eta, profile, model, quad))
        .collect::<Result<Vec<f64>>>()?;
    let lut = Lut3D {
        clip_ratio_db: model.clip_ratio_db,
        se_grid: se_grid.to_vec(),
        loss_grid: loss_grid.to_vec(),
        ber,
        model_kind: model.kind,
        model_hash: model.content_hash()?,
    };
    lut.check_monotone()?;
    Ok(lut)
}

/// Index of the first grid point at or above `x`, after snapping.
fn round_up(grid: &[f64], x: f64, name: &str) -> Result<usize> {
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if !(x >= lo - SNAP_TOLERANCE && x <= hi + SNAP_TOLERANCE) {
        return Err(Error::OutOfRange(format!("{name} {x} outside table range [{lo}, {hi}]")));
    }
    Ok(grid.partition_point(|&g| g < x - SNAP_TOLERANCE))
}

impl Lut3D {
    pub fn at(&self, se_index: usize, loss_index: usize) -> f64 {
        self.ber[se_index * self.loss_grid.len() + loss_index]
    }

    pub fn se_min(&self) -> f64 {
        self.se_grid[0]
    }

    pub fn se_max(&self) -> f64 {
        self.se_grid[self.se_grid.len() - 1]
    }

    /// Structural checks shared by construction and loading.
    pub fn validate(&self) -> Result<()> {
        check_grid("se", &self.se_grid, SE_MIN, SE_MAX)?;
        check_grid("loss", &self.loss_grid, f64::MIN_POSITIVE, f64::MAX)?;
        if self.ber.len() != self.se_grid.len() * self.loss_grid.len() {
            return Err(Error::Consistency(format!(
                "{} BER values for a {}x{} grid",
                self.ber.len(),
                self.se_grid.len(),
                self.loss_grid.len()
            )));
        }
        if let Some(b) = self.ber.iter().find(|b| !(**b >= 0.0 && **b <= 1.0)) {
            return Err(Error::Consistency(format!("BER {b} outside [0, 1]")));
        }
        if !self.clip_ratio_db.is_finite() {
            return Err(Error::Consistency("clip ratio is not finite".into()));
        }
        Ok(())
    }

    fn check_monotone(&self) -> Result<()> {
        for (i, &se) in self.se_grid.iter().enumerate() {
            for (j, &loss) in self.loss_grid.iter().enumerate() {
                let v = self.at(i, j);
                if j > 0 && v < self.at(i, j - 1) - MONOTONICITY_TOLERANCE {
                    return Err(Error::Monotonicity {
                        se,
                        loss,
                        detail: format!("BER {v:e} below {:e} at loss {}", self.at(i, j - 1), self.loss_grid[j - 1]),
                    });
                }
                if i > 0 && v < self.at(i - 1, j) - MONOTONICITY_TOLERANCE {
                    return Err(Error::Monotonicity {
                        se,
                        loss,
                        detail: format!("BER {v:e} below {:e} at se {}", self.at(i - 1, j), self.se_grid[i - 1]),
                    });
                }
            }
        }
        Ok(())
    }

    /// BER at the nearest grid cell at or above `(se, loss)` on both axes.
    pub fn lookup_ber(&self, se: f64, loss: f64) -> Result<f64> {
        let i = round_up(&self.se_grid, se, "se")?;
        let j = round_up(&self.loss_grid, loss, "loss")?;
        Ok(self.at(i, j))
    }

    /// SHA-256 of the binary encoding, hex encoded.
    pub fn content_hash(&self) -> String {
        hex(&Sha256::digest(self.to_binary()))
    }
}

/// Free-function form of [`Lut3D::lookup_ber`].
pub fn lookup_ber(lut: &Lut3D, se: f64, loss: f64) -> Result<f64> {
    lut.lookup_ber(se, loss)
}

/// Inputs of the greedy SE search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSettings {
    pub ber_target: f64,
    pub se_max: f64,
    pub delta_se: f64,
    /// FEC redundancy as a fraction, e.g. 0.07.
    pub fec_overhead: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            ber_target: 3.8e-3,
            se_max: SE_MAX,
            delta_se: 0.01,
            fec_overhead: 0.07,
        }
    }
}

impl SearchSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.ber_target > 0.0 && self.ber_target <= 0.5) {
            return Err(Error::InvalidParameter(format!("ber_target {} outside (0, 0.5]", self.ber_target)));
        }
        if !(self.delta_se > 0.0) || !self.delta_se.is_finite() {
            return Err(Error::InvalidParameter(format!("delta_se must be positive, got {}", self.delta_se)));
        }
        if !(self.se_max >= SE_MIN && self.se_max <= SE_MAX) {
            return Err(Error::InvalidParameter(format!(
                "se_max {} outside [{SE_MIN}, {SE_MAX}]",
                self.se_max
            )));
        }
        if !(self.fec_overhead >= 0.0) || !self.fec_overhead.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "fec_overhead must be non-negative, got {}",
                self.fec_overhead
            )));
        }
        Ok(())
    }
}

/// SE assignment for every leaf and the resulting throughput.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    /// Capacity-optimal clipping ratio of the profile.
    pub eta_opt_db: f64,
    /// Ratio the table was built at.
    pub clip_ratio_db: f64,
    pub ses: Vec<f64>,
    pub predicted_bers: Vec<f64>,
    pub capacity_gross_bps: f64,
    pub capacity_net_bps: f64,
    pub ber_target: f64,
}

/// Steps one leaf down from `se_max` until its table BER meets the target.
pub fn search_leaf(lut: &Lut3D, index: usize, loss: f64, settings: &SearchSettings) -> Result<(f64, f64)> {
    settings.validate()?;
    if settings.se_max > lut.se_max() + SNAP_TOLERANCE {
        return Err(Error::OutOfRange(format!(
            "se_max {} above table maximum {}",
            settings.se_max,
            lut.se_max()
        )));
    }
    let mut step = 0usize;
    loop {
        let se = round12(settings.se_max - step as f64 * settings.delta_se);
        if se < lut.se_min() - SNAP_TOLERANCE {
            return Err(Error::InfeasibleLeaf {
                index,
                se_min: lut.se_min(),
                ber_target: settings.ber_target,
            });
        }
        let ber = lut.lookup_ber(se, loss)?;
        if ber <= settings.ber_target {
            return Ok((se, ber));
        }
        step += 1;
    }
}

/// Runs [`search_leaf`] for every leaf, keeping per-leaf failures.
pub fn search_all(lut: &Lut3D, profile: &LinkProfile, settings: &SearchSettings) -> Vec<Result<(f64, f64)>> {
    profile
        .losses
        .iter()
        .enumerate()
        .map(|(i, &loss)| search_leaf(lut, i, loss, settings))
        .collect()
}

/// Optimal clipping ratio of `profile`, after checking that `lut` was built
/// there.
pub fn checked_optimal_ratio(profile: &LinkProfile, lut: &Lut3D) -> Result<f64> {
    let (lo, hi, step) = RATIO_SEARCH_DB;
    let (eta_opt_db, _) = optimal_clipping_ratio(profile, lo, hi, step)?;
    if (eta_opt_db - lut.clip_ratio_db).abs() > RATIO_TOLERANCE_DB {
        return Err(Error::Consistency(format!(
            "table built at {} dB but the optimal clipping ratio is {eta_opt_db:.3} dB",
            lut.clip_ratio_db
        )));
    }
    Ok(eta_opt_db)
}

/// Locates the optimal clipping ratio, checks that `lut` was built there,
/// then assigns each leaf the largest grid SE whose table BER meets the
/// target.
pub fn optimize(profile: &LinkProfile, lut: &Lut3D, settings: &SearchSettings) -> Result<OptimizationResult> {
    settings.validate()?;
    let eta_opt_db = checked_optimal_ratio(profile, lut)?;
    let mut ses = Vec::with_capacity(profile.subcarrier_count());
    let mut predicted_bers = Vec::with_capacity(profile.subcarrier_count());
    for leaf in search_all(lut, profile, settings) {
        let (se, ber) = leaf?;
        ses.push(se);
        predicted_bers.push(ber);
    }
    Ok(assemble(eta_opt_db, lut.clip_ratio_db, ses, predicted_bers, profile, settings))
}

/// Gross and net throughput of an SE assignment.
pub fn capacities(ses: &[f64], profile: &LinkProfile, fec_overhead: f64) -> (f64, f64) {
    let gross = profile.subcarrier_bandwidth * ses.iter().sum::<f64>();
    (gross, gross / (1.0 + fec_overhead))
}

pub(crate) fn assemble(
    eta_opt_db: f64,
    clip_ratio_db: f64,
    ses: Vec<f64>,
    predicted_bers: Vec<f64>,
    profile: &LinkProfile,
    settings: &SearchSettings,
) -> OptimizationResult {
    let (capacity_gross_bps, capacity_net_bps) = capacities(&ses, profile, settings.fec_overhead);
    OptimizationResult {
        eta_opt_db,
        clip_ratio_db,
        ses,
        predicted_bers,
        capacity_gross_bps,
        capacity_net_bps,
        ber_target: settings.ber_target,
    }
}
