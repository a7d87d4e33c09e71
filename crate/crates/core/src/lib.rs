//! Capacity analysis and spectral-efficiency planning for peak-power
//! constrained digital-subcarrier-multiplexed (DSCM) point-to-multi-point
//! links with entropy loading.
//!
//! The crate is organized bottom-up:
//! * [`math`]: special functions, adaptive quadrature and scalar solvers.
//! * [`clipping`]: closed-form clipping attenuation, clipping noise, effective
//!   SNR and capacity, and the optimal clipping ratio.
//! * [`shaping`]: Maxwell–Boltzmann shaped 8PAM rails and Gray labelling.
//! * [`sim`]: Monte-Carlo DSCM transmitter, clipper and per-subcarrier receiver.
//! * [`noise_model`]: piecewise power-exponential clipping-noise densities and
//!   the resulting bit error ratios.
//! * [`lut`]: BER look-up tables over (SE, loss) and the greedy SE search.

// `!(x > 0.0)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clipping;
pub mod error;
pub mod lut;
pub mod math;
pub mod noise_model;
pub mod shaping;
pub mod sim;

pub use clipping::{
    capacity, capacity_sweep, clipping_attenuation, clipping_noise_power, effective_snr, eta_to_ratio_db,
    optimal_clipping_ratio, ratio_db_to_eta, ClippingAnalysis, LinkProfile, NoiseReference,
};
pub use error::{Error, Result};
pub use lut::{build_lut, lookup_ber, optimize, Lut3D, OptimizationResult, SearchSettings};
pub use math::QuadratureSpec;
pub use shaping::{euclidean_distance, mb_distribution_for_se, AmplitudeDistribution};
pub use sim::{ConditionedNoiseSamples, DscmSimulator, SimResult, WaveformConfig};
pub use noise_model::{fit_noise_model, theoretical_ber, ExtractionPlan, NoiseModel, NoiseModelKind, PiecewiseExpFit};
