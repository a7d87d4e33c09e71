//! One function per subcommand. Each writes its artifacts under the
//! configured output directory and returns what it wrote.

use std::path::{Path, PathBuf};

use dscm_core::lut::{
    build_lut, capacities, checked_optimal_ratio, default_loss_grid, default_se_grid, search_all, uniform_grid,
    Lut3D, RATIO_SEARCH_DB, UNCLIPPED_RATIO_DB,
};
use dscm_core::noise_model::ExtractionSummary;
use dscm_core::sim::{ChannelSetting, SimResult};
use dscm_core::{
    capacity_sweep as sweep, fit_noise_model, optimal_clipping_ratio, ratio_db_to_eta, theoretical_ber,
    ClippingAnalysis, DscmSimulator, Error, NoiseModel, NoiseModelKind, Result,
};

use crate::artifact::{ensure_dir, num, opt, Provenance, Table};
use crate::config::{LutModel, RunConfig};

/// Files written by a command and a short human-readable summary.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

impl Report {
    fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }
}

fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn optimum_db(cfg: &RunConfig) -> Result<f64> {
    let (lo, hi, step) = RATIO_SEARCH_DB;
    Ok(optimal_clipping_ratio(&cfg.profile, lo, hi, step)?.0)
}

fn loss_grid(cfg: &RunConfig) -> Result<Vec<f64>> {
    if cfg.loss_step > 0.0 {
        default_loss_grid(&cfg.profile, cfg.loss_step)
    } else {
        let mut g = cfg.profile.losses.clone();
        g.sort_by(f64::total_cmp);
        g.dedup();
        Ok(g)
    }
}

fn lut_kind(kind: NoiseModelKind) -> &'static str {
    match kind {
        NoiseModelKind::Piecewise => "piecewise",
        NoiseModelKind::Gaussian => "gaussian",
    }
}

/// Capacity against clipping ratio, with the refined optimum as an extra
/// flagged row.
pub fn capacity_sweep(cfg: &RunConfig) -> Result<Report> {
    ensure_dir(&cfg.output_dir)?;
    let s = &cfg.sweep;
    let grid = uniform_grid(s.lo_db, s.hi_db, s.step_db)?;
    let (opt_db, opt_analysis) = optimal_clipping_ratio(&cfg.profile, s.lo_db, s.hi_db, s.step_db)?;
    let mut rows = sweep(&cfg.profile, &grid)?;
    match rows.iter().position(|a| (a.ratio_db - opt_db).abs() < 1e-9) {
        Some(_) => {}
        None => {
            let at = rows.partition_point(|a| a.ratio_db < opt_db);
            rows.insert(at, opt_analysis.clone());
        }
    }
    let n = cfg.profile.subcarrier_count();
    let mut header: Vec<String> = ["ratio_db", "eta", "alpha", "beta", "clip_noise_power", "capacity_bps", "is_optimum"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=n).map(|i| format!("esnr_db_{i}")));
    let mut table = Table::new(&header);
    for a in &rows {
        let mut row = vec![
            num(a.ratio_db),
            num(a.eta),
            num(a.alpha),
            num(a.matching_coefficient),
            num(a.clip_noise_power),
            num(a.capacity_bps),
            u8::from((a.ratio_db - opt_db).abs() < 1e-9).to_string(),
        ];
        row.extend(a.esnr_per_subcarrier.iter().map(|&e| num(to_db(e))));
        table.push(row);
    }
    let top = ClippingAnalysis::new(&cfg.profile, s.hi_db)?;
    let mut report = Report::default();
    report
        .files
        .push(table.write(&cfg.output_dir, "capacity_sweep.csv", "capacity-sweep", cfg, &Provenance::default())?);
    report.note(format!(
        "optimum {opt_db:.3} dB, capacity {:.2} Gb/s, {:.3}x the capacity at {} dB",
        opt_analysis.capacity_bps / 1e9,
        opt_analysis.capacity_bps / top.capacity_bps,
        s.hi_db
    ));
    Ok(report)
}

/// Analytic against simulated effective SNR for every ratio and subcarrier.
pub fn esnr_validate(cfg: &RunConfig) -> Result<Report> {
    if !cfg.mode.sim() {
        return Err(Error::Config("esnr-validate needs mode sim or both".into()));
    }
    ensure_dir(&cfg.output_dir)?;
    let wf = cfg.waveform_with_blocks(cfg.esnr.blocks)?;
    let sim = DscmSimulator::new(&cfg.profile, &cfg.esnr.ses, &wf)?;
    let settings: Vec<ChannelSetting> = cfg.esnr.ratios_db.iter().map(|&r| ChannelSetting::clipped(r)).collect();
    let results = sim.run_many(&settings)?;
    let mut table = Table::new(&["ratio_db", "subcarrier", "loss", "esnr_theory_db", "esnr_sim_db", "delta_db"]);
    let mut worst = 0.0f64;
    for (&ratio, res) in cfg.esnr.ratios_db.iter().zip(&results) {
        let a = ClippingAnalysis::new(&cfg.profile, ratio)?;
        for (i, (m, &th)) in res.per_subcarrier.iter().zip(&a.esnr_per_subcarrier).enumerate() {
            let (t, s) = (to_db(th), to_db(m.esnr_linear));
            worst = worst.max((s - t).abs());
            table.push(vec![num(ratio), (i + 1).to_string(), num(m.loss), num(t), num(s), num(s - t)]);
        }
    }
    let mut report = Report::default();
    report
        .files
        .push(table.write(&cfg.output_dir, "esnr_validation.csv", "esnr-validate", cfg, &Provenance::default())?);
    report.note(format!("max |esnr_sim - esnr_theory| = {worst:.4} dB"));
    Ok(report)
}

fn fit_rows(model: &NoiseModel, summaries: &[ExtractionSummary]) -> Table {
    let mut table = Table::new(&[
        "reference_se",
        "level",
        "source_se",
        "blocks",
        "samples",
        "split",
        "left_amplitude",
        "left_location",
        "left_shape",
        "left_spread",
        "right_amplitude",
        "right_location",
        "right_shape",
        "right_spread",
        "r_squared",
        "density_gap",
    ]);
    for (r, s) in model.references.iter().zip(summaries) {
        for (j, lf) in r.levels.iter().enumerate() {
            let f = &lf.fit;
            table.push(vec![
                num(r.se),
                f.level.to_string(),
                num(lf.source_se),
                s.blocks.to_string(),
                s.samples[j].to_string(),
                num(f.split),
                num(f.left.amplitude),
                num(f.left.location),
                num(f.left.shape),
                num(f.left.spread),
                num(f.right.amplitude),
                num(f.right.location),
                num(f.right.shape),
                num(f.right.spread),
                num(f.r_squared),
                num(f.density_gap),
            ]);
        }
    }
    table
}

fn fit_model(cfg: &RunConfig, ratio_db: f64, report: &mut Report) -> Result<NoiseModel> {
    let (model, summaries) = fit_noise_model(&cfg.profile, &cfg.waveform, ratio_db, &cfg.extraction, &cfg.quad)?;
    let path = cfg.output_dir.join("noise_model.toml");
    model.save(&path)?;
    report.files.push(path);
    let prov = Provenance::default().with("noise_model_sha256", model.content_hash()?);
    report
        .files
        .push(fit_rows(&model, &summaries).write(&cfg.output_dir, "noise_fit.csv", "fit-noise", cfg, &prov)?);
    Ok(model)
}

/// Fits the piecewise clipping-noise model and saves it.
pub fn fit_noise(cfg: &RunConfig) -> Result<Report> {
    ensure_dir(&cfg.output_dir)?;
    let ratio = match cfg.clip_ratio_db {
        Some(r) => r,
        None => optimum_db(cfg)?,
    };
    let mut report = Report::default();
    let model = fit_model(cfg, ratio, &mut report)?;
    report.note(format!(
        "fitted {} reference SEs at {ratio:.3} dB, model sha256 {}",
        model.references.len(),
        model.content_hash()?
    ));
    Ok(report)
}

/// Loads `path` or produces the model the configuration asks for.
fn obtain_model(
    cfg: &RunConfig,
    kind: LutModel,
    ratio_db: f64,
    path: Option<&Path>,
    report: &mut Report,
) -> Result<NoiseModel> {
    if let Some(p) = path {
        let m = NoiseModel::load(p)?;
        if (m.clip_ratio_db - ratio_db).abs() > 1e-9 {
            return Err(Error::Consistency(format!(
                "{} was fitted at {} dB, {ratio_db} dB needed",
                p.display(),
                m.clip_ratio_db
            )));
        }
        return Ok(m);
    }
    match kind {
        LutModel::Gaussian => NoiseModel::gaussian(ratio_db, cfg.profile.dscm_power),
        LutModel::Piecewise => fit_model(cfg, ratio_db, report),
    }
}

fn save_lut(cfg: &RunConfig, lut: &Lut3D, command: &str, report: &mut Report) -> Result<()> {
    let stem = format!("lut_{}", lut_kind(lut.model_kind));
    for ext in ["lut", "dlut"] {
        let path = cfg.output_dir.join(format!("{stem}.{ext}"));
        lut.save(&path)?;
        report.files.push(path);
    }
    let mut table = Table::new(&["se", "loss", "ber"]);
    for (i, &se) in lut.se_grid.iter().enumerate() {
        for (j, &loss) in lut.loss_grid.iter().enumerate() {
            table.push(vec![num(se), num(loss), num(lut.at(i, j))]);
        }
    }
    let prov = Provenance::default()
        .with("noise_model_sha256", lut.model_hash.clone())
        .with("lut_sha256", lut.content_hash());
    report
        .files
        .push(table.write(&cfg.output_dir, &format!("{stem}.csv"), command, cfg, &prov)?);
    Ok(())
}

/// Builds and saves the BER table for the configured noise model.
pub fn build_lut_command(cfg: &RunConfig, noise_model: Option<&Path>) -> Result<Report> {
    ensure_dir(&cfg.output_dir)?;
    let ratio = match cfg.clip_ratio_db {
        Some(r) => r,
        None => optimum_db(cfg)?,
    };
    let mut report = Report::default();
    let model = obtain_model(cfg, cfg.lut_model, ratio, noise_model, &mut report)?;
    let lut = build_lut(
        &model,
        &cfg.profile,
        &default_se_grid(dscm_core::shaping::SE_MIN, cfg.delta_se)?,
        &loss_grid(cfg)?,
        &cfg.quad,
    )?;
    save_lut(cfg, &lut, "build-lut", &mut report)?;
    report.note(format!(
        "{} table at {ratio:.3} dB: {} SE x {} loss cells, sha256 {}",
        lut_kind(lut.model_kind),
        lut.se_grid.len(),
        lut.loss_grid.len(),
        lut.content_hash()
    ));
    Ok(report)
}

/// Outcome of planning one scenario.
struct Scenario {
    name: &'static str,
    ratio_db: f64,
    leaves: Vec<Result<(f64, f64)>>,
    lut_hash: String,
    model_hash: String,
    sim: Option<SimResult>,
}

impl Scenario {
    fn ses(&self) -> Option<Vec<f64>> {
        self.leaves.iter().map(|l| l.as_ref().ok().map(|v| v.0)).collect()
    }
}

/// Baseline, conventional Gaussian and piecewise plans with optional
/// Monte-Carlo verification.
pub fn optimize(cfg: &RunConfig, noise_model: Option<&Path>, lut_path: Option<&Path>) -> Result<Report> {
    ensure_dir(&cfg.output_dir)?;
    let search = cfg.search();
    let opt_db = optimum_db(cfg)?;
    let se_grid = default_se_grid(dscm_core::shaping::SE_MIN, cfg.delta_se)?;
    let losses = loss_grid(cfg)?;
    let mut report = Report::default();
    let mut scenarios = Vec::new();

    let mut leaf_losses = cfg.profile.losses.clone();
    leaf_losses.sort_by(f64::total_cmp);
    leaf_losses.dedup();
    let base_model = NoiseModel::gaussian(UNCLIPPED_RATIO_DB, cfg.profile.dscm_power)?;
    let base_lut = build_lut(&base_model, &cfg.profile, &se_grid, &leaf_losses, &cfg.quad)?;
    scenarios.push(Scenario {
        name: "baseline",
        ratio_db: UNCLIPPED_RATIO_DB,
        leaves: search_all(&base_lut, &cfg.profile, &search),
        lut_hash: base_lut.content_hash(),
        model_hash: base_lut.model_hash.clone(),
        sim: None,
    });

    let gauss_model = NoiseModel::gaussian(opt_db, cfg.profile.dscm_power)?;
    let gauss_lut = build_lut(&gauss_model, &cfg.profile, &se_grid, &losses, &cfg.quad)?;
    checked_optimal_ratio(&cfg.profile, &gauss_lut)?;
    save_lut(cfg, &gauss_lut, "optimize", &mut report)?;

    let piece_lut = match lut_path {
        Some(p) => {
            let lut = Lut3D::load(p)?;
            if lut.model_kind != NoiseModelKind::Piecewise {
                return Err(Error::Consistency(format!("{} is not a piecewise-model table", p.display())));
            }
            lut
        }
        None => {
            let model = obtain_model(cfg, LutModel::Piecewise, opt_db, noise_model, &mut report)?;
            let lut = build_lut(&model, &cfg.profile, &se_grid, &losses, &cfg.quad)?;
            save_lut(cfg, &lut, "optimize", &mut report)?;
            lut
        }
    };
    checked_optimal_ratio(&cfg.profile, &piece_lut)?;
    for (name, lut) in [("gaussian", &gauss_lut), ("piecewise", &piece_lut)] {
        scenarios.push(Scenario {
            name,
            ratio_db: lut.clip_ratio_db,
            leaves: search_all(lut, &cfg.profile, &search),
            lut_hash: lut.content_hash(),
            model_hash: lut.model_hash.clone(),
            sim: None,
        });
    }

    if cfg.mode.sim() {
        let wf = cfg.waveform_with_blocks(cfg.verify_blocks)?;
        for s in &mut scenarios {
            if let Some(ses) = s.ses() {
                let sim = DscmSimulator::new(&cfg.profile, &ses, &wf)?;
                s.sim = Some(sim.run(ChannelSetting::clipped(s.ratio_db))?);
            }
        }
    }

    let mut leaves = Table::new(&[
        "scenario",
        "clip_ratio_db",
        "subcarrier",
        "loss",
        "se",
        "predicted_ber",
        "status",
        "sim_ber",
        "sim_bit_errors",
        "sim_low_confidence",
    ]);
    let mut summary = Table::new(&[
        "scenario",
        "clip_ratio_db",
        "eta_opt_db",
        "feasible_leaves",
        "capacity_gross_bps",
        "capacity_net_bps",
        "gain_vs_baseline_pct",
        "max_sim_ber_over_target",
    ]);
    let mut baseline_gross = None;
    let mut prov = Provenance::default().with("eta_opt_db", num(opt_db));
    for s in &scenarios {
        prov = prov
            .with(&format!("{}_noise_model_sha256", s.name), s.model_hash.clone())
            .with(&format!("{}_lut_sha256", s.name), s.lut_hash.clone());
        let mut feasible = Vec::new();
        for (i, leaf) in s.leaves.iter().enumerate() {
            let m = s.sim.as_ref().map(|r| &r.per_subcarrier[i]);
            let (se, ber, status) = match leaf {
                Ok((se, ber)) => {
                    feasible.push(*se);
                    (Some(*se), Some(*ber), "ok".to_string())
                }
                Err(e) => (None, None, format!("{}: {e}", e.category())),
            };
            leaves.push(vec![
                s.name.to_string(),
                num(s.ratio_db),
                (i + 1).to_string(),
                num(cfg.profile.losses[i]),
                opt(se),
                opt(ber),
                status,
                opt(m.map(|m| m.ber)),
                m.map(|m| m.error_count.to_string()).unwrap_or_default(),
                m.map(|m| u8::from(m.low_confidence).to_string()).unwrap_or_default(),
            ]);
        }
        let (gross, net) = capacities(&feasible, &cfg.profile, cfg.fec_overhead);
        if s.name == "baseline" {
            baseline_gross = Some(gross);
        }
        let gain = baseline_gross.map(|b| (gross / b - 1.0) * 100.0);
        let worst = s
            .sim
            .as_ref()
            .map(|r| r.per_subcarrier.iter().map(|m| m.ber).fold(0.0, f64::max) / cfg.ber_target);
        summary.push(vec![
            s.name.to_string(),
            num(s.ratio_db),
            num(opt_db),
            format!("{}/{}", feasible.len(), s.leaves.len()),
            num(gross),
            num(net),
            opt(gain),
            opt(worst),
        ]);
        let ses: Vec<String> = s
            .leaves
            .iter()
            .map(|l| l.as_ref().map(|v| format!("{:.2}", v.0)).unwrap_or_else(|_| "-".into()))
            .collect();
        let mut line = format!(
            "{:<9} {:>6.2} dB  SE [{}]  {:.2} Gb/s gross",
            s.name,
            s.ratio_db,
            ses.join(", "),
            gross / 1e9
        );
        if let Some(g) = gain.filter(|_| s.name != "baseline") {
            line += &format!(" ({g:+.1}%)");
        }
        if let Some(w) = worst {
            line += &format!(", worst sim BER {w:.2}x target");
        }
        report.note(line);
    }
    report
        .files
        .push(leaves.write(&cfg.output_dir, "optimization.csv", "optimize", cfg, &prov)?);
    report
        .files
        .push(summary.write(&cfg.output_dir, "optimization_summary.csv", "optimize", cfg, &prov)?);
    Ok(report)
}

/// Monte-Carlo BER of the configured SEs at each configured ratio, with
/// analytic predictions alongside.
pub fn simulate(cfg: &RunConfig) -> Result<Report> {
    ensure_dir(&cfg.output_dir)?;
    let ses = &cfg.simulate.ses;
    let ratios = &cfg.simulate.ratios_db;
    let mut report = Report::default();
    let results: Vec<Option<SimResult>> = if cfg.mode.sim() {
        let wf = cfg.waveform_with_blocks(cfg.simulate.blocks)?;
        let sim = DscmSimulator::new(&cfg.profile, ses, &wf)?;
        let settings: Vec<ChannelSetting> = ratios.iter().map(|&r| ChannelSetting::clipped(r)).collect();
        sim.run_many(&settings)?.into_iter().map(Some).collect()
    } else {
        vec![None; ratios.len()]
    };
    let mut table = Table::new(&[
        "ratio_db",
        "subcarrier",
        "loss",
        "se",
        "sim_ber",
        "sim_bit_errors",
        "sim_bits",
        "sim_low_confidence",
        "esnr_sim_db",
        "esnr_theory_db",
        "ber_theory_gaussian",
        "ber_theory_piecewise",
    ]);
    let mut prov = Provenance::default();
    for (&ratio, res) in ratios.iter().zip(&results) {
        let analysis = ClippingAnalysis::new(&cfg.profile, ratio)?;
        let eta = ratio_db_to_eta(ratio);
        let (gauss, piece) = if cfg.mode.theory() {
            let g = NoiseModel::gaussian(ratio, cfg.profile.dscm_power)?;
            let p = match fit_noise_model(&cfg.profile, &cfg.waveform, ratio, &cfg.extraction, &cfg.quad) {
                Ok((m, _)) => {
                    prov = prov.with(&format!("noise_model_sha256_{ratio}dB"), m.content_hash()?);
                    Some(m)
                }
                Err(e) => {
                    report.note(format!("no piecewise prediction at {ratio} dB: {e}"));
                    None
                }
            };
            (Some(g), p)
        } else {
            (None, None)
        };
        let mut worst: Option<f64> = None;
        for (i, (&se, &loss)) in ses.iter().zip(&cfg.profile.losses).enumerate() {
            let m = res.as_ref().map(|r| &r.per_subcarrier[i]);
            let predict = |model: &Option<NoiseModel>| -> Result<Option<f64>> {
                model
                    .as_ref()
                    .map(|md| theoretical_ber(se, loss, eta, &cfg.profile, md, &cfg.quad))
                    .transpose()
            };
            if let Some(m) = m {
                worst = Some(worst.unwrap_or(0.0).max(m.ber));
            }
            table.push(vec![
                num(ratio),
                (i + 1).to_string(),
                num(loss),
                num(se),
                opt(m.map(|m| m.ber)),
                m.map(|m| m.error_count.to_string()).unwrap_or_default(),
                m.map(|m| m.bit_count.to_string()).unwrap_or_default(),
                m.map(|m| u8::from(m.low_confidence).to_string()).unwrap_or_default(),
                opt(m.map(|m| to_db(m.esnr_linear))),
                num(to_db(analysis.esnr_per_subcarrier[i])),
                opt(predict(&gauss)?),
                opt(predict(&piece)?),
            ]);
        }
        if let Some(w) = worst {
            report.note(format!("{ratio} dB: worst simulated BER {w:.3e}"));
        }
    }
    report
        .files
        .push(table.write(&cfg.output_dir, "simulation.csv", "simulate", cfg, &prov)?);
    Ok(report)
}
