use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dscm_cli::{commands, exit_code, LutModel, Mode, Overrides, Report, RunConfig};

/// Capacity, clipping-noise and spectral-efficiency planning for DSCM
/// point-to-multi-point links.
#[derive(Parser)]
#[command(name = "dscm", version)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `waveform.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    #[arg(long = "lut-model", global = true, value_enum)]
    lut_model: Option<LutModel>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity and effective SNR against clipping ratio.
    CapacitySweep,
    /// Analytic against simulated effective SNR.
    EsnrValidate,
    /// Fit the piecewise clipping-noise model.
    FitNoise,
    /// Build the BER look-up table.
    BuildLut {
        /// Reuse a saved noise model instead of fitting one.
        #[arg(long)]
        noise_model: Option<PathBuf>,
    },
    /// Plan SEs for the baseline, Gaussian and piecewise tables.
    Optimize {
        /// Reuse a saved noise model instead of fitting one.
        #[arg(long)]
        noise_model: Option<PathBuf>,
        /// Reuse a saved piecewise table instead of building one.
        #[arg(long)]
        lut: Option<PathBuf>,
    },
    /// Monte-Carlo BER of the configured SEs.
    Simulate,
    /// Print the resolved configuration.
    ShowConfig,
}

fn run(cli: Cli) -> dscm_core::Result<Report> {
    let overrides = Overrides {
        seed: cli.seed,
        output_dir: cli.out,
        mode: cli.mode,
        lut_model: cli.lut_model,
    };
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::CapacitySweep => commands::capacity_sweep(&cfg),
        Command::EsnrValidate => commands::esnr_validate(&cfg),
        Command::FitNoise => commands::fit_noise(&cfg),
        Command::BuildLut { noise_model } => commands::build_lut_command(&cfg, noise_model.as_deref()),
        Command::Optimize { noise_model, lut } => commands::optimize(&cfg, noise_model.as_deref(), lut.as_deref()),
        Command::Simulate => commands::simulate(&cfg),
        Command::ShowConfig => {
            print!("{}", cfg.to_toml()?);
            Ok(Report::default())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            for line in &report.summary {
                println!("{line}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(exit_code(e.category()) as u8)
        }
    }
}
