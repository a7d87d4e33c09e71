use criterion::{black_box, criterion_group, criterion_main, Criterion};
use dscm_core::lut::default_se_grid;
use dscm_core::noise_model::fit_piecewise_exp;
use dscm_core::shaping::SE_MIN;
use dscm_core::sim::ChannelSetting;
use dscm_core::{
    build_lut, capacity_sweep, fit_noise_model, ratio_db_to_eta, theoretical_ber, DscmSimulator, ExtractionPlan,
    LinkProfile, NoiseModel, QuadratureSpec, WaveformConfig,
};

fn small_wf() -> WaveformConfig {
    WaveformConfig {
        symbols_per_block: 2000,
        blocks: 4,
        seed: 7,
        ..WaveformConfig::default()
    }
}

fn small_model(profile: &LinkProfile, quad: &QuadratureSpec) -> NoiseModel {
    let plan = ExtractionPlan {
        reference_ses: vec![3.0, 4.5, 6.0],
        target_samples: 40_000,
        min_probability: 0.02,
        blocks_per_round: 4,
        max_blocks: 8,
    };
    fit_noise_model(profile, &small_wf(), 7.0, &plan, quad).unwrap().0
}

fn clipping(c: &mut Criterion) {
    let profile = LinkProfile::eight_leaf_reference();
    let ratios: Vec<f64> = (0..=100).map(|i| 3.0 + 0.1 * i as f64).collect();
    c.bench_function("capacity_sweep_101_ratios", |b| {
        b.iter(|| capacity_sweep(&profile, black_box(&ratios)).unwrap())
    });
}

fn ber(c: &mut Criterion) {
    let profile = LinkProfile::eight_leaf_reference();
    let quad = QuadratureSpec::default();
    let eta = ratio_db_to_eta(7.0);
    let gaussian = NoiseModel::gaussian(7.0, profile.dscm_power).unwrap();
    let piecewise = small_model(&profile, &quad);
    c.bench_function("theoretical_ber_gaussian", |b| {
        b.iter(|| theoretical_ber(black_box(4.2), 2.32, eta, &profile, &gaussian, &quad).unwrap())
    });
    c.bench_function("theoretical_ber_piecewise", |b| {
        b.iter(|| theoretical_ber(black_box(4.2), 2.32, eta, &profile, &piecewise, &quad).unwrap())
    });

    let lut = build_lut(
        &gaussian,
        &profile,
        &default_se_grid(SE_MIN, 0.01).unwrap(),
        &profile.losses,
        &quad,
    )
    .unwrap();
    c.bench_function("lut_lookup", |b| b.iter(|| lut.lookup_ber(black_box(4.567), black_box(2.0)).unwrap()));
}

fn fitting(c: &mut Criterion) {
    let profile = LinkProfile::eight_leaf_reference();
    let sim = DscmSimulator::new(&profile, &[4.0; 8], &small_wf()).unwrap();
    let samples = sim.extract_clipping_noise(7.0).unwrap().mirrored(1).unwrap();
    let quad = QuadratureSpec::default();
    c.bench_function("fit_piecewise_exp", |b| {
        b.iter(|| fit_piecewise_exp(black_box(&samples), 1, &quad).unwrap())
    });
}

fn simulation(c: &mut Criterion) {
    let profile = LinkProfile::eight_leaf_reference();
    let wf = WaveformConfig {
        blocks: 1,
        ..WaveformConfig::default()
    };
    let sim = DscmSimulator::new(&profile, &[4.8, 4.4, 4.0, 3.6, 3.2, 2.8, 2.4, 2.0], &wf).unwrap();
    c.bench_function("simulate_one_block", |b| b.iter(|| sim.run(ChannelSetting::clipped(7.0)).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = clipping, ber, fitting, simulation
}
criterion_main!(benches);
