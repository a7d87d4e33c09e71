use super::*;
use crate::clipping::{clipping_noise_power, NoiseReference};
use crate::math::q_function;

fn profile(losses: Vec<f64>, noise: f64) -> LinkProfile {
    LinkProfile::new(losses, noise, NoiseReference::PerSubcarrier, 2.579, 8e9).unwrap()
}

fn small_wf(blocks: usize) -> WaveformConfig {
    WaveformConfig {
        symbols_per_block: 1000,
        rrc_rolloff: 0.01,
        blocks,
        bandwidth_oversampling: 1.0,
        seed: 7,
    }
}

fn eight() -> LinkProfile {
    LinkProfile::eight_leaf_reference()
}

#[test]
fn geometry_checks() {
    let wf = WaveformConfig::default();
    let g = wf.geometry(8).unwrap();
    assert_eq!(g.spacing_bins, 4040);
    assert_eq!(g.block_len, 8 * 4040);
    assert_eq!(g.center_bin(0), -7 * 2020);
    assert_eq!(g.center_bin(7), 7 * 2020);
    let odd = WaveformConfig {
        symbols_per_block: 1100,
        rrc_rolloff: 0.01,
        ..wf.clone()
    };
    assert!(matches!(odd.geometry(8), Err(Error::Config(_))));
    assert!(odd.geometry(3).is_ok());
    let frac = WaveformConfig {
        symbols_per_block: 1001,
        ..wf.clone()
    };
    assert!(frac.geometry(8).is_err());
    let alias = WaveformConfig {
        bandwidth_oversampling: 0.9,
        ..wf.clone()
    };
    assert!(alias.geometry(8).is_err());
    let roll = WaveformConfig {
        rrc_rolloff: 0.0,
        ..wf
    };
    assert!(roll.geometry(8).is_err());
}

#[test]
fn rrc_folds_to_flat_power() {
    for rolloff in [0.01, 0.1, 0.5, 1.0] {
        for j in 0..200 {
            let f = j as f64 / 200.0;
            let s = rrc_spectrum(f, rolloff).powi(2) + rrc_spectrum(f - 1.0, rolloff).powi(2);
            assert!((s - 1.0).abs() < 1e-12, "rolloff {rolloff} f {f}: {s}");
        }
    }
}

#[test]
fn single_subcarrier_power() {
    let p = profile(vec![1.0], 0.01);
    let w = generate_dscm(&p, &[6.0], &small_wf(40)).unwrap();
    let mean = w.iter().map(|s| s.norm_sqr()).sum::<f64>() / w.len() as f64;
    assert!((mean - 1.0).abs() < 0.005, "{mean}");
}

#[test]
fn matched_filter_powers_sum_to_total() {
    let p = eight();
    let ses = [4.0; 8];
    let wf = WaveformConfig {
        blocks: 20,
        ..WaveformConfig::default()
    };
    let sim = DscmSimulator::new(&p, &ses, &wf).unwrap();
    let mut per = [0.0; 8];
    let mut total = 0.0;
    let mut count = 0usize;
    for b in 0..20 {
        let block = sim.generate_block(b);
        total += block.waveform.iter().map(|s| s.norm_sqr()).sum::<f64>() / block.waveform.len() as f64;
        for (i, y) in sim.demultiplex(&block.waveform).iter().enumerate() {
            per[i] += y.iter().map(|s| s.norm_sqr()).sum::<f64>() / y.len() as f64;
        }
        count += 1;
    }
    let total = total / count as f64;
    for v in per.iter_mut() {
        *v /= count as f64;
        assert!((*v - 0.125).abs() < 0.125 * 0.01, "{v}");
    }
    let sum: f64 = per.iter().sum();
    assert!((sum - total).abs() < 0.01 * total);
}

#[test]
fn real_part_is_near_gaussian() {
    let sim = DscmSimulator::new(&eight(), &[4.0; 8], &WaveformConfig {
        blocks: 33,
        ..WaveformConfig::default()
    })
    .unwrap();
    let w = sim.waveform();
    assert!(w.len() >= 1 << 20);
    let n = w.len() as f64;
    let m2 = w.iter().map(|s| s.re * s.re).sum::<f64>() / n;
    let m4 = w.iter().map(|s| s.re.powi(4)).sum::<f64>() / n;
    let kurt = m4 / (m2 * m2) - 3.0;
    assert!(kurt.abs() < 0.1, "excess kurtosis {kurt}");
    let papr = papr_ccdf_db(&w, 1e-4).unwrap();
    assert!(papr > 9.0, "{papr}");
}

#[test]
fn clipping_limits() {
    let sim = DscmSimulator::new(&eight(), &[5.0; 8], &small_wf(2)).unwrap();
    let w = sim.generate_block(0).waveform;
    let crest = w.iter().map(|s| s.re.abs().max(s.im.abs())).fold(0.0, f64::max) / 0.5f64.sqrt();
    assert_eq!(clip_waveform(&w, 8.0 * crest, 1.0), w);
    let rail = 1e-4 * 0.5f64.sqrt();
    let clipped = clip_waveform(&w, 1e-4, 1.0);
    assert!(clipped.iter().all(|s| s.re.abs() <= rail && s.im.abs() <= rail));
    let pinned = clipped.iter().filter(|s| s.re.abs() == rail && s.im.abs() == rail).count();
    assert!(pinned as f64 > 0.999 * w.len() as f64);
}

#[test]
fn clipping_slope_matches_attenuation() {
    let sim = DscmSimulator::new(&eight(), &[5.0; 8], &WaveformConfig {
        blocks: 33,
        ..WaveformConfig::default()
    })
    .unwrap();
    let w = sim.waveform();
    let eta = 2.2387;
    let c = clip_waveform(&w, eta, 1.0);
    let (mut xy, mut xx) = (0.0, 0.0);
    for (a, b) in w.iter().zip(&c) {
        xy += a.re * b.re + a.im * b.im;
        xx += a.re * a.re + a.im * a.im;
    }
    let slope = xy / xx;
    let expected = 1.0 - 2.0 * q_function(eta);
    assert!((slope / expected - 1.0).abs() < 0.005, "{slope} vs {expected}");
}

#[test]
fn identity_chain_is_clean() {
    let p = profile(vec![1.0; 8], 1e-3);
    let sim = DscmSimulator::new(&p, &[6.0, 5.5, 5.0, 4.5, 4.0, 3.5, 3.0, 2.5], &small_wf(2)).unwrap();
    let block = sim.generate_block(1);
    for r in sim.receive_block(&block, ChannelSetting::unclipped().without_noise()).unwrap() {
        let sig: f64 = r.transmitted.iter().map(|x| x.norm_sqr()).sum();
        let err: f64 = r.received.iter().zip(&r.transmitted).map(|(y, x)| (y - x).norm_sqr()).sum();
        assert!(10.0 * (err / sig).log10() < -40.0);
    }
    let res = sim.run(ChannelSetting::unclipped().without_noise()).unwrap();
    for m in &res.per_subcarrier {
        assert_eq!(m.error_count, 0);
        assert_eq!(m.ber, 0.0);
        assert_eq!(m.bit_count, 2 * 1000 * 6);
        assert!(m.low_confidence);
    }
    assert_eq!(res.clip_ratio_db, None);
}

#[test]
fn noise_only_esnr() {
    let p = profile(vec![1.0, 1.33, 1.74, 2.32, 3.05, 4.03, 5.25, 6.53], 0.0237 / 24.0);
    let sim = DscmSimulator::new(&p, &[4.0; 8], &small_wf(30)).unwrap();
    let res = sim.run(ChannelSetting::unclipped()).unwrap();
    for (m, &loss) in res.per_subcarrier.iter().zip(&p.losses) {
        let theory = 1.0 / (8.0 * loss * p.noise_variance);
        let delta = 10.0 * (m.esnr_linear / theory).log10();
        assert!(delta.abs() < 0.2, "loss {loss}: {delta} dB");
        assert_eq!(m.ber, m.error_count as f64 / m.bit_count as f64);
    }
}

#[test]
fn deterministic_and_block_independent() {
    let p = eight();
    let ses = [5.0, 4.8, 4.6, 4.4, 4.2, 4.0, 3.8, 3.6];
    let a = DscmSimulator::new(&p, &ses, &small_wf(6)).unwrap();
    let r1 = a.run(ChannelSetting::clipped(7.0)).unwrap();
    let r2 = a.run(ChannelSetting::clipped(7.0)).unwrap();
    assert_eq!(r1, r2);
    let many = a
        .run_many(&[ChannelSetting::clipped(9.0), ChannelSetting::clipped(7.0)])
        .unwrap();
    assert_eq!(many[1], r1);
    let other_seed = DscmSimulator::new(&p, &ses, &WaveformConfig { seed: 8, ..small_wf(6) }).unwrap();
    assert_ne!(other_seed.generate_block(0).waveform, a.generate_block(0).waveform);
    assert_eq!(a.generate_block(3).waveform, a.generate_block(3).waveform);
}

#[test]
fn clipping_raises_papr_floor() {
    let sim = DscmSimulator::new(&eight(), &[4.0; 8], &small_wf(4)).unwrap();
    let clipped = sim.run(ChannelSetting::clipped(5.0)).unwrap();
    let free = sim.run(ChannelSetting::unclipped()).unwrap();
    // the square clipping region caps the envelope at A, and clipping removes
    // about 0.6 dB of average power at 5 dB
    assert!(clipped.measured_papr_db < free.measured_papr_db, "{} {}", clipped.measured_papr_db, free.measured_papr_db);
    assert!(clipped.measured_papr_db < 5.0 + 0.7, "{}", clipped.measured_papr_db);
}

#[test]
fn extraction_without_clipping_is_silent() {
    let sim = DscmSimulator::new(&eight(), &[4.0; 8], &small_wf(2)).unwrap();
    let s = sim.extract_clipping_noise(40.0).unwrap();
    assert_eq!(s.total(), 2 * 1000 * 8 * 2);
    for v in &s.by_level {
        assert!(v.iter().all(|x| x.abs() < 1e-3));
    }
}

#[test]
fn extraction_counts_and_variance() {
    let p = eight();
    let se = 4.4;
    let sim = DscmSimulator::new(&p, &[se; 8], &small_wf(24)).unwrap();
    let s = sim.extract_clipping_noise(7.0).unwrap();
    let dist = mb_distribution_for_se(se).unwrap();
    let total = s.total() as f64;
    for (j, &level) in LEVELS.iter().enumerate() {
        let pr = dist.prob_of(level);
        let expect = total * pr;
        let sd = (total * pr * (1.0 - pr)).sqrt();
        assert!((s.by_level[j].len() as f64 - expect).abs() < 3.0 * sd + 1.0, "level {level}");
    }
    let var = s.by_level.iter().flatten().map(|x| x * x).sum::<f64>() / total;
    let eta = ratio_db_to_eta(7.0);
    let alpha = clipping_attenuation(eta).unwrap();
    let theory = dist.rail_power() * clipping_noise_power(eta, 1.0).unwrap() / (alpha * alpha);
    assert!((var / theory - 1.0).abs() < 0.10, "{var} vs {theory}");
    assert!(s.symmetry_z_score() < 5.0);
    let mirrored = s.mirrored(3).unwrap();
    assert_eq!(mirrored.len(), s.level(3).unwrap().len() + s.level(-3).unwrap().len());
}

#[test]
fn rejects_mismatched_inputs() {
    let p = eight();
    assert!(DscmSimulator::new(&p, &[4.0; 7], &small_wf(1)).is_err());
    assert!(DscmSimulator::new(&p, &[6.5; 8], &small_wf(1)).is_err());
}
