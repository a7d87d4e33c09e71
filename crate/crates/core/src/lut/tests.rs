use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::noise_model::{fit_noise_model, ExtractionPlan};
use crate::sim::WaveformConfig;

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn profile() -> LinkProfile {
    LinkProfile::eight_leaf_reference()
}

fn optimal_db() -> f64 {
    let (lo, hi, step) = RATIO_SEARCH_DB;
    optimal_clipping_ratio(&profile(), lo, hi, step).unwrap().0
}

fn gaussian_lut(se_grid: &[f64], loss_grid: &[f64]) -> Lut3D {
    let model = NoiseModel::gaussian(optimal_db(), 1.0).unwrap();
    build_lut(&model, &profile(), se_grid, loss_grid, &quad()).unwrap()
}

fn coarse_lut() -> Lut3D {
    gaussian_lut(&uniform_grid(2.0, 6.0, 0.05).unwrap(), &default_loss_grid(&profile(), 0.25).unwrap())
}

#[test]
fn single_cell_equals_direct_evaluation() {
    let model = NoiseModel::gaussian(7.0, 1.0).unwrap();
    let lut = build_lut(&model, &profile(), &[4.4], &[1.33], &quad()).unwrap();
    let direct = theoretical_ber(4.4, 1.33, ratio_db_to_eta(7.0), &profile(), &model, &quad()).unwrap();
    assert_eq!(lut.ber, vec![direct]);
    assert_eq!(lut.model_hash, model.content_hash().unwrap());
}

#[test]
fn monotone_in_both_axes() {
    let lut = coarse_lut();
    let m = lut.loss_grid.len();
    let last = lut.loss_grid.iter().position(|&l| (l - 6.53).abs() < 1e-12).unwrap();
    for i in 0..lut.se_grid.len() {
        assert!(lut.at(i, 0) <= lut.at(i, last));
        for j in 1..m {
            assert!(lut.at(i, j) >= lut.at(i, j - 1));
        }
    }
}

#[test]
fn grids() {
    let se = default_se_grid(2.0, 0.01).unwrap();
    assert_eq!(se.len(), 401);
    assert_eq!(se[0], 2.0);
    assert_eq!(se[400], 6.0);
    assert_eq!(se[137], 3.37);
    let loss = default_loss_grid(&profile(), 0.05).unwrap();
    for l in &profile().losses {
        assert!(loss.contains(l), "{l}");
    }
    assert_eq!(loss[0], 1.0);
    assert_eq!(*loss.last().unwrap(), 6.53);
    assert!(loss.windows(2).all(|w| w[0] < w[1]));
    assert!(default_se_grid(2.0, 0.0).is_err());
}

#[test]
fn rejects_bad_grids() {
    let model = NoiseModel::gaussian(7.0, 1.0).unwrap();
    let p = profile();
    assert!(build_lut(&model, &p, &[], &[1.0], &quad()).is_err());
    assert!(build_lut(&model, &p, &[4.0, 3.0], &[1.0], &quad()).is_err());
    assert!(build_lut(&model, &p, &[6.5], &[1.0], &quad()).is_err());
    assert!(build_lut(&model, &p, &[4.0], &[0.0], &quad()).is_err());
}

#[test]
fn non_monotone_table_is_rejected() {
    let mut lut = coarse_lut();
    let j = 3;
    let i = lut.se_grid.len() - 1;
    let cols = lut.loss_grid.len();
    lut.ber[i * cols + j] = lut.at(i, j - 1) * 0.5;
    match lut.check_monotone().unwrap_err() {
        Error::Monotonicity { se, loss, .. } => {
            assert_eq!(se, lut.se_grid[i]);
            assert_eq!(loss, lut.loss_grid[j]);
        }
        e => panic!("unexpected {e}"),
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.dlut");
    lut.save(&path).unwrap();
    assert!(matches!(Lut3D::load(&path), Err(Error::Monotonicity { .. })));
}

#[test]
fn lookup_rounds_up_on_both_axes() {
    let lut = coarse_lut();
    assert_eq!(lut.lookup_ber(4.0, 1.0).unwrap(), lut.at(40, 0));
    assert_eq!(lut.lookup_ber(4.01, 1.0).unwrap(), lut.at(41, 0));
    assert_eq!(lut.lookup_ber(4.0 + 1e-10, 1.0).unwrap(), lut.at(40, 0));
    assert_eq!(lut.lookup_ber(4.0, 1.1).unwrap(), lut.at(40, 1));
    assert!(matches!(lut.lookup_ber(1.9, 1.0), Err(Error::OutOfRange(_))));
    assert!(matches!(lut.lookup_ber(6.01, 1.0), Err(Error::OutOfRange(_))));
    assert!(matches!(lut.lookup_ber(4.0, 0.9), Err(Error::OutOfRange(_))));
    assert!(matches!(lut.lookup_ber(4.0, 7.0), Err(Error::OutOfRange(_))));
    assert_eq!(lookup_ber(&lut, 4.0, 1.0).unwrap(), lut.at(40, 0));
}

#[test]
fn lookup_never_below_direct_evaluation() {
    let lut = coarse_lut();
    let model = NoiseModel::gaussian(lut.clip_ratio_db, 1.0).unwrap();
    let eta = ratio_db_to_eta(lut.clip_ratio_db);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let se = rng.gen_range(2.0..6.0);
        let loss = rng.gen_range(1.0..6.53);
        let direct = theoretical_ber(se, loss, eta, &profile(), &model, &quad()).unwrap();
        let looked = lut.lookup_ber(se, loss).unwrap();
        assert!(looked >= direct, "({se}, {loss}): {looked:e} < {direct:e}");
    }
}

#[test]
fn text_and_binary_round_trip() {
    let lut = gaussian_lut(&[2.0, 3.5, 6.0], &[1.0, 2.32, 6.53]);
    assert_eq!(Lut3D::from_text(&lut.to_text()).unwrap(), lut);
    assert_eq!(Lut3D::from_binary(&lut.to_binary()).unwrap(), lut);
    let dir = tempfile::tempdir().unwrap();
    for name in ["t.lut", "b.dlut"] {
        let path = dir.path().join(name);
        lut.save(&path).unwrap();
        assert_eq!(Lut3D::load(&path).unwrap(), lut);
    }
    let bin = std::fs::read(dir.path().join("b.dlut")).unwrap();
    assert_eq!(&bin[0..4], LUT_MAGIC);
    assert_eq!(bin.len(), 128 + 8 * (3 + 3 + 9));
    assert!(std::fs::read_to_string(dir.path().join("t.lut")).unwrap().starts_with("dscm-lut 1\n"));
    assert_eq!(lut.content_hash(), lut.clone().content_hash());
}

#[test]
fn load_rejects_corrupt_files() {
    let lut = gaussian_lut(&[2.0, 3.5], &[1.0, 2.0]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.lut");
    let text = lut.to_text().replace("loss_grid 2", "loss_grid 3");
    std::fs::write(&path, text).unwrap();
    assert!(matches!(Lut3D::load(&path), Err(Error::Format { .. })));
    let mut bin = lut.to_binary();
    bin.pop();
    std::fs::write(&path, bin).unwrap();
    assert!(matches!(Lut3D::load(&path), Err(Error::Format { .. })));
    let bad_ber = lut.to_text().replacen("ber\n", "ber\n2e0 ", 1);
    std::fs::write(&path, bad_ber).unwrap();
    assert!(matches!(Lut3D::load(&path), Err(Error::Format { .. })));
}

#[test]
fn half_target_keeps_se_max() {
    let lut = coarse_lut();
    let settings = SearchSettings {
        ber_target: 0.5,
        ..SearchSettings::default()
    };
    let r = optimize(&profile(), &lut, &settings).unwrap();
    assert!(r.ses.iter().all(|&s| s == 6.0));
    assert!((r.capacity_gross_bps - 8e9 * 48.0).abs() < 1e-3);
    assert!((r.capacity_net_bps - r.capacity_gross_bps / 1.07).abs() < 1e-3);
}

#[test]
fn search_is_tight_and_ordered() {
    let lut = gaussian_lut(&default_se_grid(2.0, 0.01).unwrap(), &profile().losses);
    let settings = SearchSettings::default();
    let r = optimize(&profile(), &lut, &settings).unwrap();
    for (i, (&se, &ber)) in r.ses.iter().zip(&r.predicted_bers).enumerate() {
        assert!(ber <= settings.ber_target);
        assert_eq!(ber, lut.lookup_ber(se, profile().losses[i]).unwrap());
        if se < 6.0 {
            assert!(lut.lookup_ber(se + settings.delta_se, profile().losses[i]).unwrap() > settings.ber_target);
        }
    }
    assert!(r.ses.windows(2).all(|w| w[0] >= w[1]), "{:?}", r.ses);
    let sum: f64 = r.ses.iter().sum();
    assert!((r.capacity_gross_bps - 8e9 * sum).abs() < 1e-3);
}

#[test]
fn unreachable_leaf_is_reported() {
    let mut p = profile();
    p.losses = vec![1.0, 1e6];
    let model = NoiseModel::gaussian(7.0, 1.0).unwrap();
    let lut = build_lut(&model, &p, &[2.0, 3.0], &[1.0, 1e6], &quad()).unwrap();
    let settings = SearchSettings {
        se_max: 3.0,
        delta_se: 1.0,
        ..SearchSettings::default()
    };
    let leaves = search_all(&lut, &p, &settings);
    assert!(leaves[0].is_ok());
    assert!(matches!(leaves[1], Err(Error::InfeasibleLeaf { index: 1, .. })));
}

#[test]
fn ratio_mismatch_is_a_consistency_error() {
    let model = NoiseModel::gaussian(10.0, 1.0).unwrap();
    let lut = build_lut(&model, &profile(), &[2.0, 6.0], &profile().losses, &quad()).unwrap();
    assert!(matches!(
        optimize(&profile(), &lut, &SearchSettings::default()),
        Err(Error::Consistency(_))
    ));
}

#[test]
fn settings_validation() {
    let bad = [
        SearchSettings { ber_target: 0.0, ..SearchSettings::default() },
        SearchSettings { ber_target: 0.6, ..SearchSettings::default() },
        SearchSettings { delta_se: 0.0, ..SearchSettings::default() },
        SearchSettings { se_max: 6.5, ..SearchSettings::default() },
        SearchSettings { fec_overhead: -0.1, ..SearchSettings::default() },
    ];
    for s in bad {
        assert!(s.validate().is_err(), "{s:?}");
    }
}

#[test]
fn piecewise_table_is_monotone_across_references() {
    let plan = ExtractionPlan {
        reference_ses: vec![3.0, 4.0, 5.0],
        target_samples: 40_000,
        min_probability: 0.02,
        blocks_per_round: 4,
        max_blocks: 16,
    };
    let wf = WaveformConfig {
        symbols_per_block: 2000,
        blocks: 4,
        seed: 9,
        ..WaveformConfig::default()
    };
    let (model, _) = fit_noise_model(&profile(), &wf, 7.0, &plan, &quad()).unwrap();
    let lut = build_lut(&model, &profile(), &uniform_grid(2.5, 5.5, 0.1).unwrap(), &profile().losses, &quad())
        .unwrap();
    assert_eq!(lut.model_kind, NoiseModelKind::Piecewise);
}
