//! Run configuration read from TOML.

use std::path::{Path, PathBuf};

use dscm_core::lut::SearchSettings;
use dscm_core::shaping::{SE_MAX, SE_MIN};
use dscm_core::{Error, ExtractionPlan, LinkProfile, QuadratureSpec, Result, WaveformConfig};
use serde::{Deserialize, Serialize};

/// Which halves of an experiment run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Theory,
    Sim,
    Both,
}

impl Mode {
    pub fn theory(self) -> bool {
        self != Mode::Sim
    }

    pub fn sim(self) -> bool {
        self != Mode::Theory
    }
}

/// Clipping-noise model behind a look-up table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum LutModel {
    Piecewise,
    Gaussian,
}

/// Clipping-ratio grid of the capacity sweep, in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub lo_db: f64,
    pub hi_db: f64,
    pub step_db: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            lo_db: 3.0,
            hi_db: 13.0,
            step_db: 0.1,
        }
    }
}

/// Theory against simulation of the effective SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsnrConfig {
    pub ratios_db: Vec<f64>,
    /// Blocks simulated; each holds `waveform.symbols_per_block` symbols per
    /// subcarrier.
    pub blocks: usize,
    /// SE of each subcarrier, bit/symbol.
    pub ses: Vec<f64>,
}

impl Default for EsnrConfig {
    fn default() -> Self {
        Self {
            ratios_db: (4..=13).map(f64::from).collect(),
            blocks: 66,
            ses: vec![4.8, 4.4, 4.0, 3.6, 3.2, 2.8, 2.4, 2.0],
        }
    }
}

/// Monte-Carlo BER of a fixed SE assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub ses: Vec<f64>,
    pub ratios_db: Vec<f64>,
    pub blocks: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            ses: vec![4.8, 4.4, 4.0, 3.6, 3.2, 2.8, 2.4, 2.0],
            ratios_db: vec![13.0, 7.0],
            blocks: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub mode: Mode,
    pub lut_model: LutModel,
    /// BER every leaf must meet.
    pub ber_target: f64,
    /// First SE tried for every leaf, bit/symbol.
    pub se_max: f64,
    /// SE decrement and SE grid step, bit/symbol.
    pub delta_se: f64,
    /// FEC redundancy as a fraction.
    pub fec_overhead: f64,
    /// Linear step of the table's loss grid; 0 keeps only the profile's losses.
    pub loss_step: f64,
    /// Ratio for `fit-noise` and `build-lut`, in dB; the optimum when absent.
    pub clip_ratio_db: Option<f64>,
    /// Blocks simulated to verify each optimized assignment.
    pub verify_blocks: usize,
    pub profile: LinkProfile,
    pub waveform: WaveformConfig,
    pub quad: QuadratureSpec,
    pub extraction: ExtractionPlan,
    pub sweep: SweepConfig,
    pub esnr: EsnrConfig,
    pub simulate: SimulateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let search = SearchSettings::default();
        Self {
            output_dir: PathBuf::from("results"),
            mode: Mode::Both,
            lut_model: LutModel::Piecewise,
            ber_target: search.ber_target,
            se_max: search.se_max,
            delta_se: search.delta_se,
            fec_overhead: search.fec_overhead,
            loss_step: 0.05,
            clip_ratio_db: None,
            verify_blocks: 128,
            profile: LinkProfile::eight_leaf_reference(),
            waveform: WaveformConfig::default(),
            quad: QuadratureSpec::default(),
            extraction: ExtractionPlan::default(),
            sweep: SweepConfig::default(),
            esnr: EsnrConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub mode: Option<Mode>,
    pub lut_model: Option<LutModel>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`, or starts from the defaults when it is `None`.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                    path: p.to_path_buf(),
                    source: e,
                })?;
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => Self::default(),
        };
        if let Some(seed) = overrides.seed {
            cfg.waveform.seed = seed;
        }
        if let Some(dir) = &overrides.output_dir {
            cfg.output_dir = dir.clone();
        }
        if let Some(mode) = overrides.mode {
            cfg.mode = mode;
        }
        if let Some(m) = overrides.lut_model {
            cfg.lut_model = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    pub fn search(&self) -> SearchSettings {
        SearchSettings {
            ber_target: self.ber_target,
            se_max: self.se_max,
            delta_se: self.delta_se,
            fec_overhead: self.fec_overhead,
        }
    }

    /// Checks every section; invalid values surface as configuration errors.
    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(other.to_string()),
        };
        self.profile.validate().map_err(as_config)?;
        self.quad.validate().map_err(as_config)?;
        self.extraction.validate().map_err(as_config)?;
        self.search().validate().map_err(as_config)?;
        self.waveform_with_blocks(self.waveform.blocks)?;
        if !(self.loss_step >= 0.0) || !self.loss_step.is_finite() {
            return Err(Error::Config(format!("loss_step must be >= 0, got {}", self.loss_step)));
        }
        if let Some(r) = self.clip_ratio_db {
            if !r.is_finite() {
                return Err(Error::Config("clip_ratio_db must be finite".into()));
            }
        }
        let s = &self.sweep;
        if !(s.lo_db < s.hi_db) || !(s.step_db > 0.0) || !s.lo_db.is_finite() || !s.hi_db.is_finite() {
            return Err(Error::Config(format!("empty sweep [{}, {}] step {}", s.lo_db, s.hi_db, s.step_db)));
        }
        if self.esnr.ratios_db.is_empty() || self.esnr.ratios_db.iter().any(|r| !r.is_finite()) {
            return Err(Error::Config("esnr.ratios_db needs finite values".into()));
        }
        if self.simulate.ratios_db.iter().any(|r| !r.is_finite()) {
            return Err(Error::Config("simulate.ratios_db needs finite values".into()));
        }
        for (name, ses) in [("esnr.ses", &self.esnr.ses), ("simulate.ses", &self.simulate.ses)] {
            if ses.len() != self.profile.losses.len() {
                return Err(Error::Config(format!(
                    "{name} has {} entries for {} leaves",
                    ses.len(),
                    self.profile.losses.len()
                )));
            }
            if let Some(se) = ses.iter().find(|s| !(SE_MIN..=SE_MAX).contains(*s)) {
                return Err(Error::Config(format!("{name}: SE {se} outside [{SE_MIN}, {SE_MAX}]")));
            }
        }
        for (name, blocks) in [
            ("esnr.blocks", self.esnr.blocks),
            ("simulate.blocks", self.simulate.blocks),
            ("verify_blocks", self.verify_blocks),
        ] {
            if blocks == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    /// The waveform section with a different block count.
    pub fn waveform_with_blocks(&self, blocks: usize) -> Result<WaveformConfig> {
        let wf = WaveformConfig {
            blocks,
            ..self.waveform.clone()
        };
        wf.geometry(self.profile.subcarrier_count())?;
        Ok(wf)
    }
}
