//! The public planning pipeline: fit, persist, tabulate, search, verify.

use dscm_core::lut::{default_se_grid, RATIO_SEARCH_DB};
use dscm_core::shaping::SE_MIN;
use dscm_core::sim::ChannelSetting;
use dscm_core::{
    build_lut, fit_noise_model, optimal_clipping_ratio, optimize, DscmSimulator, ExtractionPlan, LinkProfile, Lut3D,
    NoiseModel, NoiseModelKind, QuadratureSpec, SearchSettings, WaveformConfig,
};

fn small_wf() -> WaveformConfig {
    WaveformConfig {
        symbols_per_block: 2000,
        blocks: 4,
        seed: 3,
        ..WaveformConfig::default()
    }
}

#[test]
fn plan_from_persisted_model_and_table() {
    let profile = LinkProfile::eight_leaf_reference();
    let quad = QuadratureSpec::default();
    let (lo, hi, step) = RATIO_SEARCH_DB;
    let (ratio, _) = optimal_clipping_ratio(&profile, lo, hi, step).unwrap();
    let plan = ExtractionPlan {
        reference_ses: vec![3.0, 4.5, 6.0],
        target_samples: 40_000,
        min_probability: 0.02,
        blocks_per_round: 4,
        max_blocks: 8,
    };
    let (model, summaries) = fit_noise_model(&profile, &small_wf(), ratio, &plan, &quad).unwrap();
    assert_eq!(summaries.len(), 3);
    assert_eq!(model.kind, NoiseModelKind::Piecewise);

    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("model.toml");
    model.save(&model_path).unwrap();
    let model = NoiseModel::load(&model_path).unwrap();

    let se_grid = default_se_grid(SE_MIN, 0.01).unwrap();
    let lut = build_lut(&model, &profile, &se_grid, &profile.losses, &quad).unwrap();
    let lut_path = dir.path().join("table.dlut");
    lut.save(&lut_path).unwrap();
    let lut = Lut3D::load(&lut_path).unwrap();
    assert_eq!(lut.model_hash, model.content_hash().unwrap());

    let settings = SearchSettings::default();
    let result = optimize(&profile, &lut, &settings).unwrap();
    assert!(result.ses.windows(2).all(|w| w[0] >= w[1]), "{:?}", result.ses);
    assert!(result.predicted_bers.iter().all(|&b| b <= settings.ber_target));
    let gaussian = NoiseModel::gaussian(13.0, profile.dscm_power).unwrap();
    let baseline = optimize(
        &profile,
        &build_lut(&gaussian, &profile, &se_grid, &profile.losses, &quad).unwrap(),
        &settings,
    );
    // the 13 dB table does not sit at the optimum
    assert!(baseline.is_err());

    let wf = WaveformConfig {
        blocks: 8,
        ..small_wf()
    };
    let sim = DscmSimulator::new(&profile, &result.ses, &wf)
        .unwrap()
        .run(ChannelSetting::clipped(ratio))
        .unwrap();
    for m in &sim.per_subcarrier {
        assert!(m.ber < 2.0 * settings.ber_target, "{m:?}");
    }
}
