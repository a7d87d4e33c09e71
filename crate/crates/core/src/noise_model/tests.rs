use super::*;
use crate::clipping::NoiseReference;
use crate::math::integrate;

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn small_plan() -> ExtractionPlan {
    ExtractionPlan {
        reference_ses: vec![4.0, 5.0],
        target_samples: 40_000,
        min_probability: 0.02,
        blocks_per_round: 4,
        max_blocks: 16,
    }
}

fn small_wf() -> WaveformConfig {
    WaveformConfig {
        symbols_per_block: 2000,
        blocks: 4,
        seed: 3,
        ..WaveformConfig::default()
    }
}

fn fitted() -> (NoiseModel, Vec<ExtractionSummary>) {
    fit_noise_model(&LinkProfile::eight_leaf_reference(), &small_wf(), 7.0, &small_plan(), &quad()).unwrap()
}

#[test]
fn gaussian_model_round_trips() {
    let m = NoiseModel::gaussian(7.39, 1.0).unwrap();
    let text = m.to_toml().unwrap();
    assert_eq!(NoiseModel::from_toml(&text).unwrap(), m);
    assert_eq!(m.content_hash().unwrap().len(), 64);
    assert!(NoiseModel::from_toml("format = \"other\"").is_err());
}

#[test]
fn gaussian_ber_monotone_in_loss_and_se() {
    let p = LinkProfile::eight_leaf_reference();
    let m = NoiseModel::gaussian(7.0, 1.0).unwrap();
    let eta = ratio_db_to_eta(7.0);
    for &se in &[3.0, 4.5, 6.0] {
        let mut prev = 0.0;
        for i in 0..30 {
            let loss = 1.0 + 0.25 * i as f64;
            let b = theoretical_ber(se, loss, eta, &p, &m, &quad()).unwrap();
            assert!(b >= prev, "se {se} loss {loss}");
            prev = b;
        }
    }
    let mut prev = 0.0;
    for i in 0..=40 {
        let se = 2.0 + 0.1 * i as f64;
        let b = theoretical_ber(se, 2.0, eta, &p, &m, &quad()).unwrap();
        assert!(b >= prev, "se {se}");
        prev = b;
    }
}

#[test]
fn huge_loss_reaches_plateau() {
    let p = LinkProfile::eight_leaf_reference();
    let m = NoiseModel::gaussian(7.0, 1.0).unwrap();
    let b = theoretical_ber(4.0, 1e14, ratio_db_to_eta(7.0), &p, &m, &quad()).unwrap();
    let plateau = total_ber(&collapsed_bit_error_ratios(&mb_distribution_for_se(4.0).unwrap()).unwrap());
    assert!((b - plateau).abs() < 1e-4, "{b} {plateau}");
}

#[test]
fn rejects_mismatched_ratio() {
    let p = LinkProfile::eight_leaf_reference();
    let m = NoiseModel::gaussian(7.0, 1.0).unwrap();
    let e = theoretical_ber(4.0, 1.0, ratio_db_to_eta(8.0), &p, &m, &quad()).unwrap_err();
    assert!(matches!(e, Error::Consistency(_)));
    let mut raw = m.clone();
    raw.d_units = false;
    assert!(theoretical_ber(4.0, 1.0, ratio_db_to_eta(7.0), &p, &raw, &quad()).is_err());
}

#[test]
fn gaussian_ber_matches_q_oracle() {
    // noise-only leaf: clip ratio high enough that clipping noise vanishes
    let p = LinkProfile::new(vec![1.0], 0.01, NoiseReference::PerSubcarrier, 1.0, 1e9).unwrap();
    let m = NoiseModel::gaussian(40.0, 1.0).unwrap();
    let eta = ratio_db_to_eta(40.0);
    let b = theoretical_ber(6.0, 1.0, eta, &p, &m, &quad()).unwrap();
    let beta = 1.0 / eta;
    let d = (beta * beta / 42.0f64).sqrt();
    let s = (0.005f64).sqrt() / d;
    let q = crate::math::q_function;
    // uniform Gray 8PAM per-bit ratios under white noise
    let e1 = (q(1.0 / s) + q(3.0 / s) + q(5.0 / s) + q(7.0 / s)) / 4.0;
    let e2 = (2.0 * q(3.0 / s) + q(1.0 / s) + q(5.0 / s) - q(9.0 / s) - q(11.0 / s) + q(7.0 / s) + q(13.0 / s)) / 4.0;
    assert!(b > 0.0 && b < 0.5);
    let partial = (e1 + e2) / 3.0;
    assert!(b > partial);
}

#[test]
fn fitted_model_properties() {
    let (m, summary) = fitted();
    assert_eq!(summary.len(), 2);
    assert_eq!(m.references.len(), 2);
    for r in &m.references {
        for lf in &r.levels {
            assert!((lf.fit.mass(&quad()).unwrap() - 1.0).abs() < 1e-6);
            let f = &lf.fit;
            let total = integrate(|z| combined_pdf(z, f, 0.15, &quad()).unwrap(), -20.0, 20.0, &quad()).unwrap();
            assert!((total - 1.0).abs() < 1e-4, "{total}");
        }
    }
    // persistence reproduces densities bit for bit
    let text = m.to_toml().unwrap();
    let back = NoiseModel::from_toml(&text).unwrap();
    assert_eq!(back, m);
    for (a, b) in m.references.iter().zip(&back.references) {
        for (x, y) in a.levels.iter().zip(&b.levels) {
            for i in 0..50 {
                let z = -1.0 + 0.04 * i as f64;
                assert_eq!(x.fit.pdf(z).to_bits(), y.fit.pdf(z).to_bits());
            }
        }
    }
    assert_eq!(back.content_hash().unwrap(), m.content_hash().unwrap());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.toml");
    m.save(&path).unwrap();
    assert_eq!(NoiseModel::load(&path).unwrap(), m);

    let at = m.clip_noise_at(4.25).unwrap();
    assert_eq!(at.len(), 2);
    assert!((at[0].0 - 0.75).abs() < 1e-12 && (at[1].0 - 0.25).abs() < 1e-12);
    assert_eq!(m.clip_noise_at(3.0).unwrap().len(), 1);
    assert_eq!(m.clip_noise_at(5.0).unwrap().len(), 1);
}

#[test]
fn mirrored_fit_matches_refit_of_flipped_samples() {
    let p = LinkProfile::eight_leaf_reference();
    let sim = DscmSimulator::new(&p, &[4.5; 8], &small_wf()).unwrap();
    let s = sim.extract_blocks(7.0, 0..8).unwrap();
    let pooled = s.mirrored(3).unwrap();
    let fit = fit_piecewise_exp(&pooled, 3, &quad()).unwrap();
    let flipped: Vec<f64> = pooled.iter().map(|x| -x).collect();
    let refit = fit_piecewise_exp(&flipped, -3, &quad()).unwrap();
    let mirror = fit.mirrored();
    let peak = fit.pdf(fit.split);
    for i in 0..41 {
        let y = -0.6 + 0.03 * i as f64;
        assert!((mirror.pdf(y) - refit.pdf(y)).abs() < 0.05 * peak, "{y}");
    }
}
