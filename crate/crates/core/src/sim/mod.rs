//! Monte-Carlo DSCM link: shaped 64QAM subcarriers are multiplexed with
//! square-root raised-cosine spectra, clipped per rail, peak matched,
//! attenuated per leaf, corrupted by white noise and received by a matched
//! filter.
//!
//! Each block is a circular waveform synthesized in the frequency domain, so
//! the matched filter and the subcarrier multiplex are exact and clipping
//! distortion can be measured without filter-truncation artifacts. With
//! `bandwidth_oversampling = 1` the sample rate equals the occupied bandwidth
//! and every spectral component of the clipping distortion lands inside some
//! subcarrier band.

mod dump;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::clipping::{clipping_attenuation, ratio_db_to_eta, LinkProfile};
use crate::error::{Error, Result};
use crate::shaping::{decide_level, gray_bits, mb_distribution_for_se, AmplitudeDistribution, LevelSampler, LEVELS};

pub use dump::{read_waveform_dump, write_waveform_dump, WaveformDump, DUMP_MAGIC, DUMP_VERSION};

type C64 = Complex<f64>;

const NOISE_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;
const BITS_PER_SYMBOL: u64 = 6;
/// Fewer counted errors than this marks a BER estimate as low confidence.
pub const MIN_CONFIDENT_ERRORS: u64 = 100;

/// Waveform synthesis settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformConfig {
    /// Roll-off of the square-root raised-cosine subcarrier spectrum.
    pub rrc_rolloff: f64,
    /// Symbols per subcarrier in one circular block.
    pub symbols_per_block: usize,
    pub blocks: usize,
    /// Sample rate over the occupied bandwidth (>= 1).
    pub bandwidth_oversampling: f64,
    pub seed: u64,
}

impl Default for WaveformConfig {
    fn default() -> Self {
        Self {
            rrc_rolloff: 0.01,
            symbols_per_block: 4000,
            blocks: 66,
            bandwidth_oversampling: 1.0,
            seed: 1,
        }
    }
}

/// Frequency-grid layout derived from a `WaveformConfig` and a subcarrier
/// count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockGeometry {
    pub subcarriers: usize,
    pub symbols: usize,
    /// FFT bins between adjacent subcarrier centers.
    pub spacing_bins: usize,
    /// Samples in one block.
    pub block_len: usize,
}

impl BlockGeometry {
    pub fn samples_per_symbol(&self) -> f64 {
        self.block_len as f64 / self.symbols as f64
    }

    /// Center bin of subcarrier `i`, symmetric around DC.
    pub fn center_bin(&self, i: usize) -> isize {
        ((2 * i as isize - (self.subcarriers as isize - 1)) * self.spacing_bins as isize) / 2
    }
}

impl WaveformConfig {
    pub fn symbols_per_subcarrier(&self) -> u64 {
        (self.symbols_per_block * self.blocks) as u64
    }

    pub fn geometry(&self, subcarriers: usize) -> Result<BlockGeometry> {
        let bad = |m: String| Err(Error::Config(m));
        if subcarriers == 0 {
            return bad("at least one subcarrier is required".into());
        }
        if !(self.rrc_rolloff > 0.0 && self.rrc_rolloff <= 1.0) {
            return bad(format!("rrc_rolloff must lie in (0, 1], got {}", self.rrc_rolloff));
        }
        if self.symbols_per_block < 16 || self.blocks == 0 {
            return bad("symbols_per_block must be >= 16 and blocks >= 1".into());
        }
        let m = self.symbols_per_block as f64;
        let spacing = (1.0 + self.rrc_rolloff) * m;
        let spacing_bins = spacing.round();
        if (spacing - spacing_bins).abs() > 1e-6 {
            return bad(format!(
                "(1 + rrc_rolloff) * symbols_per_block = {spacing} must be an integer number of bins"
            ));
        }
        let spacing_bins = spacing_bins as usize;
        if subcarriers % 2 == 0 && spacing_bins % 2 == 1 {
            return bad(format!(
                "an even subcarrier count needs an even bin spacing, got {spacing_bins}"
            ));
        }
        if !(self.bandwidth_oversampling >= 1.0) || !self.bandwidth_oversampling.is_finite() {
            return bad(format!(
                "bandwidth_oversampling must be >= 1 so subcarriers do not alias, got {}",
                self.bandwidth_oversampling
            ));
        }
        let occupied = (subcarriers * spacing_bins) as f64;
        let len = occupied * self.bandwidth_oversampling;
        if (len - len.round()).abs() > 1e-6 {
            return bad(format!("block length {len} samples is not an integer"));
        }
        Ok(BlockGeometry {
            subcarriers,
            symbols: self.symbols_per_block,
            spacing_bins,
            block_len: len.round() as usize,
        })
    }
}

/// Square-root raised-cosine amplitude response at frequency `f` in units of
/// the symbol rate.
pub fn rrc_spectrum(f: f64, rolloff: f64) -> f64 {
    let f = f.abs();
    let edge = 0.5 * (1.0 - rolloff);
    if f <= edge {
        1.0
    } else if f >= 0.5 * (1.0 + rolloff) {
        0.0
    } else {
        (PI / (2.0 * rolloff) * (f - edge)).cos()
    }
}

/// Hard-limits each rail to `[-A/sqrt 2, A/sqrt 2]` with `A = eta * sqrt(dscm_power)`.
pub fn clip_waveform(waveform: &[C64], eta: f64, dscm_power: f64) -> Vec<C64> {
    let rail = eta * (0.5 * dscm_power).sqrt();
    waveform
        .iter()
        .map(|s| C64::new(s.re.clamp(-rail, rail), s.im.clamp(-rail, rail)))
        .collect()
}

/// Fraction-of-time point of the instantaneous-to-mean power CCDF, in dB:
/// the smallest level exceeded by at most `prob` of the samples.
pub fn papr_ccdf_db(waveform: &[C64], prob: f64) -> Result<f64> {
    if waveform.is_empty() || !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidParameter("need samples and a probability in (0, 1)".into()));
    }
    let mut p: Vec<f64> = waveform.iter().map(|s| s.norm_sqr()).collect();
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    let idx = (((1.0 - prob) * p.len() as f64).ceil() as usize).min(p.len() - 1);
    let (_, v, _) = p.select_nth_unstable_by(idx, |a, b| a.total_cmp(b));
    Ok(10.0 * (*v / mean).log10())
}

/// Clipping and noise applied between transmitter and matched filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSetting {
    /// Clipping ratio in dB; `None` disables clipping and peak matching.
    pub clip_ratio_db: Option<f64>,
    pub white_noise: bool,
}

impl ChannelSetting {
    pub fn clipped(ratio_db: f64) -> Self {
        Self {
            clip_ratio_db: Some(ratio_db),
            white_noise: true,
        }
    }

    pub fn unclipped() -> Self {
        Self {
            clip_ratio_db: None,
            white_noise: true,
        }
    }

    pub fn without_noise(self) -> Self {
        Self {
            white_noise: false,
            ..self
        }
    }
}

/// One synthesized block.
#[derive(Debug, Clone)]
pub struct DscmBlock {
    pub index: usize,
    pub waveform: Vec<C64>,
    /// Transmitted symbols per subcarrier on the odd-integer grid.
    pub symbols: Vec<Vec<C64>>,
}

/// Received symbols of one subcarrier in units of the half-spacing `d`,
/// together with the transmitted levels.
#[derive(Debug, Clone)]
pub struct ReceivedSymbols {
    pub received: Vec<C64>,
    pub transmitted: Vec<C64>,
    /// Gain applied to the transmitted levels by the clipper.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcarrierMeasurement {
    pub spectral_efficiency: f64,
    pub loss: f64,
    pub esnr_linear: f64,
    pub ber: f64,
    pub bit_count: u64,
    pub error_count: u64,
    /// Set when fewer than `MIN_CONFIDENT_ERRORS` errors were counted.
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub per_subcarrier: Vec<SubcarrierMeasurement>,
    /// Peak-to-average power of the transmitted waveform over all blocks.
    pub measured_papr_db: f64,
    pub clip_ratio_db: Option<f64>,
}

impl SimResult {
    pub fn esnr_db(&self) -> Vec<f64> {
        self.per_subcarrier.iter().map(|m| 10.0 * m.esnr_linear.log10()).collect()
    }

    pub fn bers(&self) -> Vec<f64> {
        self.per_subcarrier.iter().map(|m| m.ber).collect()
    }
}

/// Clipping-noise samples keyed by the transmitted signed level, in `d` units
/// of the subcarrier that carried them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionedNoiseSamples {
    pub clip_ratio_db: f64,
    /// `by_level[j]` holds samples for `LEVELS[j]`.
    pub by_level: [Vec<f64>; 8],
}

impl ConditionedNoiseSamples {
    pub fn level(&self, level: i32) -> Result<&[f64]> {
        LEVELS
            .iter()
            .position(|&l| l == level)
            .map(|j| self.by_level[j].as_slice())
            .ok_or(Error::InvalidIndex {
                index: level.unsigned_abs() as usize,
                len: 8,
            })
    }

    pub fn counts(&self) -> [usize; 8] {
        let mut c = [0; 8];
        for (j, v) in self.by_level.iter().enumerate() {
            c[j] = v.len();
        }
        c
    }

    pub fn total(&self) -> usize {
        self.counts().iter().sum()
    }

    /// Samples of `+magnitude` pooled with the sign-flipped samples of
    /// `-magnitude`.
    pub fn mirrored(&self, magnitude: i32) -> Result<Vec<f64>> {
        let pos = self.level(magnitude.abs())?;
        let neg = self.level(-magnitude.abs())?;
        let mut out = Vec::with_capacity(pos.len() + neg.len());
        out.extend_from_slice(pos);
        out.extend(neg.iter().map(|v| -v));
        Ok(out)
    }

    /// Largest standardized gap between the means of `+k` and mirrored `-k`
    /// samples, over magnitudes with at least two samples on both sides.
    pub fn symmetry_z_score(&self) -> f64 {
        let stats = |v: &[f64], sign: f64| {
            let n = v.len() as f64;
            let mean = v.iter().map(|x| sign * x).sum::<f64>() / n;
            let var = v.iter().map(|x| (sign * x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (mean, var / n)
        };
        let mut worst: f64 = 0.0;
        for k in [1, 3, 5, 7] {
            let (p, n) = (self.level(k).unwrap(), self.level(-k).unwrap());
            if p.len() < 2 || n.len() < 2 {
                continue;
            }
            let (mp, vp) = stats(p, 1.0);
            let (mn, vn) = stats(n, -1.0);
            let se = (vp + vn).sqrt();
            if se > 0.0 {
                worst = worst.max((mp - mn).abs() / se);
            }
        }
        worst
    }

    fn append(&mut self, other: ConditionedNoiseSamples) {
        for (a, b) in self.by_level.iter_mut().zip(other.by_level) {
            a.extend(b);
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    signal: f64,
    error: f64,
    bit_errors: u64,
    symbols: u64,
}

#[derive(Debug, Clone, Default)]
struct BlockTally {
    subcarriers: Vec<Tally>,
    peak_power: f64,
    power_sum: f64,
    samples: u64,
}

/// Simulator for one link profile and one spectral-efficiency assignment.
pub struct DscmSimulator {
    profile: LinkProfile,
    wf: WaveformConfig,
    geometry: BlockGeometry,
    ses: Vec<f64>,
    samplers: Vec<LevelSampler>,
    /// `sqrt(2 * rail_power)`: rms magnitude of the integer-grid symbols.
    symbol_rms: Vec<f64>,
    taps: Vec<(isize, f64)>,
    fft_block: Arc<dyn Fft<f64>>,
    ifft_block: Arc<dyn Fft<f64>>,
    fft_symbols: Arc<dyn Fft<f64>>,
    ifft_symbols: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for DscmSimulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DscmSimulator")
            .field("geometry", &self.geometry)
            .field("ses", &self.ses)
            .finish_non_exhaustive()
    }
}

impl DscmSimulator {
    pub fn new(profile: &LinkProfile, ses: &[f64], wf: &WaveformConfig) -> Result<Self> {
        profile.validate()?;
        let n = profile.subcarrier_count();
        if ses.len() != n {
            return Err(Error::InvalidParameter(format!(
                "{} spectral efficiencies given for {n} subcarriers",
                ses.len()
            )));
        }
        let geometry = wf.geometry(n)?;
        let dists: Vec<AmplitudeDistribution> =
            ses.iter().map(|&s| mb_distribution_for_se(s)).collect::<Result<_>>()?;
        let samplers = dists.iter().map(LevelSampler::new).collect::<Result<_>>()?;
        let symbol_rms = dists.iter().map(|d| (2.0 * d.rail_power()).sqrt()).collect();
        let m = geometry.symbols as isize;
        let half = geometry.spacing_bins as isize / 2;
        let taps = (-half..=half)
            .map(|kk| (kk, rrc_spectrum(kk as f64 / m as f64, wf.rrc_rolloff)))
            .filter(|(_, g)| *g > 0.0)
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            profile: profile.clone(),
            wf: wf.clone(),
            geometry,
            ses: ses.to_vec(),
            samplers,
            symbol_rms,
            taps,
            fft_block: planner.plan_fft_forward(geometry.block_len),
            ifft_block: planner.plan_fft_inverse(geometry.block_len),
            fft_symbols: planner.plan_fft_forward(geometry.symbols),
            ifft_symbols: planner.plan_fft_inverse(geometry.symbols),
        })
    }

    pub fn geometry(&self) -> BlockGeometry {
        self.geometry
    }

    pub fn profile(&self) -> &LinkProfile {
        &self.profile
    }

    pub fn spectral_efficiencies(&self) -> &[f64] {
        &self.ses
    }

    fn subcarrier_amplitude(&self) -> f64 {
        (self.profile.dscm_power / self.geometry.subcarriers as f64).sqrt()
    }

    fn bin(&self, i: usize, kk: isize) -> usize {
        let len = self.geometry.block_len as isize;
        (self.geometry.center_bin(i) + kk).rem_euclid(len) as usize
    }

    /// Synthesizes block `index`; independent of every other block.
    pub fn generate_block(&self, index: usize) -> DscmBlock {
        let g = self.geometry;
        let m = g.symbols;
        let mut rng = ChaCha8Rng::seed_from_u64(self.wf.seed);
        rng.set_stream(index as u64);
        let amp = self.subcarrier_amplitude();
        let mut spectrum = vec![C64::default(); g.block_len];
        let mut symbols = Vec::with_capacity(g.subcarriers);
        for i in 0..g.subcarriers {
            let sampler = &self.samplers[i];
            let syms: Vec<C64> = (0..m)
                .map(|_| {
                    let re = sampler.draw(&mut rng) as f64;
                    let im = sampler.draw(&mut rng) as f64;
                    C64::new(re, im)
                })
                .collect();
            let scale = amp / self.symbol_rms[i];
            let mut sym_spec: Vec<C64> = syms.iter().map(|s| s * scale).collect();
            self.fft_symbols.process(&mut sym_spec);
            for &(kk, gain) in &self.taps {
                spectrum[self.bin(i, kk)] += sym_spec[kk.rem_euclid(m as isize) as usize] * gain;
            }
            symbols.push(syms);
        }
        self.ifft_block.process(&mut spectrum);
        let inv_m = 1.0 / m as f64;
        for s in &mut spectrum {
            *s *= inv_m;
        }
        DscmBlock {
            index,
            waveform: spectrum,
            symbols,
        }
    }

    /// Matched-filter outputs of every subcarrier in waveform amplitude units
    /// (power `dscm_power / N` for an undistorted waveform).
    pub fn demultiplex(&self, waveform: &[C64]) -> Vec<Vec<C64>> {
        let g = self.geometry;
        let m = g.symbols;
        let mut spectrum = waveform.to_vec();
        self.fft_block.process(&mut spectrum);
        let inv_len = 1.0 / g.block_len as f64;
        (0..g.subcarriers)
            .map(|i| {
                let mut folded = vec![C64::default(); m];
                for &(kk, gain) in &self.taps {
                    folded[kk.rem_euclid(m as isize) as usize] += spectrum[self.bin(i, kk)] * gain;
                }
                self.ifft_symbols.process(&mut folded);
                for s in &mut folded {
                    *s *= inv_len;
                }
                folded
            })
            .collect()
    }

    /// Clips, peak matches, attenuates, adds white noise and matched filters
    /// one block. Outputs are scaled so that an undistorted symbol equals its
    /// transmitted odd-integer level times `alpha`.
    pub fn receive_block(&self, block: &DscmBlock, channel: ChannelSetting) -> Result<Vec<ReceivedSymbols>> {
        let (tx, alpha, beta) = match channel.clip_ratio_db {
            Some(db) => {
                let eta = ratio_db_to_eta(db);
                let alpha = clipping_attenuation(eta)?;
                let beta = self.profile.peak_amplitude / (eta * self.profile.dscm_power.sqrt());
                (clip_waveform(&block.waveform, eta, self.profile.dscm_power), alpha, beta)
            }
            None => (block.waveform.clone(), 1.0, 1.0),
        };
        let outputs = self.demultiplex(&tx);
        let amp = self.subcarrier_amplitude();
        let noise_rail_std = (0.5 * self.profile.subcarrier_noise_variance()).sqrt();
        let n = self.geometry.subcarriers;
        Ok(outputs
            .into_iter()
            .enumerate()
            .map(|(i, y)| {
                let path = beta / self.profile.losses[i].sqrt();
                // one transmitted grid unit after the channel
                let unit = path * amp / self.symbol_rms[i];
                let received = if channel.white_noise {
                    let mut rng = ChaCha8Rng::seed_from_u64(self.wf.seed ^ NOISE_SEED_SALT);
                    rng.set_stream((block.index * n + i) as u64);
                    y.iter()
                        .map(|s| {
                            let nr: f64 = rng.sample(StandardNormal);
                            let ni: f64 = rng.sample(StandardNormal);
                            (s * path + C64::new(nr, ni) * noise_rail_std) / unit
                        })
                        .collect()
                } else {
                    y.iter().map(|s| s * path / unit).collect()
                };
                ReceivedSymbols {
                    received,
                    transmitted: block.symbols[i].clone(),
                    alpha,
                }
            })
            .collect())
    }

    fn tally_block(&self, block: &DscmBlock, channel: ChannelSetting) -> Result<BlockTally> {
        let eta = channel.clip_ratio_db.map(ratio_db_to_eta);
        let rail = eta.map(|e| e * (0.5 * self.profile.dscm_power).sqrt());
        let mut peak_power: f64 = 0.0;
        let mut power_sum = 0.0;
        for s in &block.waveform {
            let s = match rail {
                Some(r) => C64::new(s.re.clamp(-r, r), s.im.clamp(-r, r)),
                None => *s,
            };
            let p = s.norm_sqr();
            peak_power = peak_power.max(p);
            power_sum += p;
        }
        let rx = self.receive_block(block, channel)?;
        let subcarriers = rx
            .iter()
            .map(|r| {
                let mut t = Tally::default();
                for (y, x) in r.received.iter().zip(&r.transmitted) {
                    let reference = x * r.alpha;
                    t.signal += reference.norm_sqr();
                    t.error += (y - reference).norm_sqr();
                    let dec = y / r.alpha;
                    t.bit_errors += bit_errors(x.re, dec.re) + bit_errors(x.im, dec.im);
                    t.symbols += 1;
                }
                t
            })
            .collect();
        Ok(BlockTally {
            subcarriers,
            peak_power,
            power_sum,
            samples: block.waveform.len() as u64,
        })
    }

    /// Runs all blocks under several channel settings, reusing each
    /// synthesized block for every setting.
    pub fn run_many(&self, channels: &[ChannelSetting]) -> Result<Vec<SimResult>> {
        let per_block: Vec<Vec<BlockTally>> = (0..self.wf.blocks)
            .into_par_iter()
            .map(|b| {
                let block = self.generate_block(b);
                channels.iter().map(|&c| self.tally_block(&block, c)).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(channels
            .iter()
            .enumerate()
            .map(|(ci, &channel)| self.summarize(per_block.iter().map(|b| &b[ci]), channel))
            .collect())
    }

    pub fn run(&self, channel: ChannelSetting) -> Result<SimResult> {
        Ok(self.run_many(&[channel])?.remove(0))
    }

    fn summarize<'a>(&self, blocks: impl Iterator<Item = &'a BlockTally>, channel: ChannelSetting) -> SimResult {
        let n = self.geometry.subcarriers;
        let mut totals = vec![Tally::default(); n];
        let (mut peak, mut power, mut samples) = (0.0f64, 0.0, 0u64);
        for b in blocks {
            for (t, s) in totals.iter_mut().zip(&b.subcarriers) {
                t.signal += s.signal;
                t.error += s.error;
                t.bit_errors += s.bit_errors;
                t.symbols += s.symbols;
            }
            peak = peak.max(b.peak_power);
            power += b.power_sum;
            samples += b.samples;
        }
        let per_subcarrier = totals
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let bit_count = t.symbols * BITS_PER_SYMBOL;
                SubcarrierMeasurement {
                    spectral_efficiency: self.ses[i],
                    loss: self.profile.losses[i],
                    esnr_linear: t.signal / t.error,
                    ber: t.bit_errors as f64 / bit_count as f64,
                    bit_count,
                    error_count: t.bit_errors,
                    low_confidence: t.bit_errors < MIN_CONFIDENT_ERRORS,
                }
            })
            .collect();
        SimResult {
            per_subcarrier,
            measured_papr_db: 10.0 * (peak / (power / samples as f64)).log10(),
            clip_ratio_db: channel.clip_ratio_db,
        }
    }

    /// Clipping-noise samples at `ratio_db` without white noise: each rail's
    /// matched-filter output divided by `alpha`, minus the transmitted level.
    pub fn extract_clipping_noise(&self, ratio_db: f64) -> Result<ConditionedNoiseSamples> {
        self.extract_blocks(ratio_db, 0..self.wf.blocks)
    }

    /// Same as `extract_clipping_noise` over an explicit block range, so
    /// callers can grow a sample set incrementally.
    pub fn extract_blocks(&self, ratio_db: f64, blocks: std::ops::Range<usize>) -> Result<ConditionedNoiseSamples> {
        let channel = ChannelSetting::clipped(ratio_db).without_noise();
        let parts: Vec<ConditionedNoiseSamples> = blocks
            .into_par_iter()
            .map(|b| {
                let block = self.generate_block(b);
                let mut out = ConditionedNoiseSamples {
                    clip_ratio_db: ratio_db,
                    ..Default::default()
                };
                for r in self.receive_block(&block, channel)? {
                    for (y, x) in r.received.iter().zip(&r.transmitted) {
                        for (rx, tx) in [(y.re, x.re), (y.im, x.im)] {
                            let j = ((tx as i32 + 7) / 2) as usize;
                            out.by_level[j].push(rx / r.alpha - tx);
                        }
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let mut all = ConditionedNoiseSamples {
            clip_ratio_db: ratio_db,
            ..Default::default()
        };
        for p in parts {
            all.append(p);
        }
        Ok(all)
    }

    /// The concatenated unclipped waveform of every block.
    pub fn waveform(&self) -> Vec<C64> {
        let blocks: Vec<DscmBlock> = (0..self.wf.blocks).into_par_iter().map(|b| self.generate_block(b)).collect();
        blocks.into_iter().flat_map(|b| b.waveform).collect()
    }
}

fn bit_errors(sent: f64, received: f64) -> u64 {
    let a = gray_bits(sent as i32).expect("transmitted level on the 8PAM grid");
    let b = gray_bits(decide_level(received)).expect("decision on the 8PAM grid");
    (a ^ b).count_ones() as u64
}

/// Unclipped DSCM waveform of `profile` carrying `ses`, all blocks
/// concatenated.
pub fn generate_dscm(profile: &LinkProfile, ses: &[f64], wf: &WaveformConfig) -> Result<Vec<C64>> {
    Ok(DscmSimulator::new(profile, ses, wf)?.waveform())
}

/// Runs the full chain once for one channel setting.
pub fn measure(
    profile: &LinkProfile,
    ses: &[f64],
    wf: &WaveformConfig,
    channel: ChannelSetting,
) -> Result<SimResult> {
    DscmSimulator::new(profile, ses, wf)?.run(channel)
}

#[cfg(test)]
mod tests;
