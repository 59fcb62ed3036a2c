//! Command-line front end: run experiment presets or config files, list
//! presets, and verify the certified quadrature-error bound on random
//! parameter draws.
//!
//! Exit codes: 0 on success, 2 when a run finishes but misses its targets
//! (or regcheck finds a bound violation), 1 on error.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use varquad::experiments::{
    load_config, list_presets, preset_by_name, regcheck, run_experiment, ExperimentPreset,
    RunOverrides,
};

#[derive(Parser)]
#[command(name = "varquad", about = "Variational PDE solving with neural networks under interchangeable quadrature rules", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment preset (or a TOML config via --config).
    Run {
        /// Preset name (see `varquad list`). Omit when using --config.
        preset: Option<String>,
        /// TOML experiment config file instead of a preset.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Output directory for trace.csv, solution.csv, params.json, summary.json.
        #[arg(long)]
        out: PathBuf,
        /// Override the preset's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the preset's iteration budget.
        #[arg(long)]
        iters: Option<usize>,
        /// Reserved for parallel sweeps; single runs ignore it.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// List the built-in experiment presets.
    List,
    /// Verify |F - F̂| ≤ R(θ) on random parameter draws.
    Regcheck {
        /// Number of random parameter draws.
        #[arg(long, default_value_t = 500)]
        samples: usize,
        /// RNG seed for the draws.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn resolve_preset(
    preset: Option<String>,
    config: Option<PathBuf>,
) -> varquad::Result<ExperimentPreset> {
    match (preset, config) {
        (Some(name), None) => preset_by_name(&name),
        (None, Some(path)) => load_config(&path),
        _ => Err(varquad::Error::InvalidConfig(
            "pass exactly one of <preset> or --config".into(),
        )),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> varquad::Result<ExitCode> {
    match cli.command {
        Command::Run {
            preset,
            config,
            out,
            seed,
            iters,
            jobs: _,
        } => {
            let preset = resolve_preset(preset, config)?;
            let overrides = RunOverrides {
                seed,
                iterations: iters,
            };
            eprintln!("running '{}' ({})", preset.name, preset.description);
            let summary = run_experiment(&preset, &out, &overrides)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            if summary.pass {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("targets missed; see {}", out.join("summary.json").display());
                Ok(ExitCode::from(2))
            }
        }
        Command::List => {
            print!("{}", list_presets());
            Ok(ExitCode::SUCCESS)
        }
        Command::Regcheck { samples, seed } => {
            let report = regcheck(samples, seed, &[20, 50], &[0.1, 1.0, 5.0])?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if report.violations == 0 {
                println!(
                    "bound held on all {} samples (max gap {:+.3e})",
                    report.samples, report.max_gap
                );
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!(
                    "bound violated on {}/{} samples (max gap {:+.3e})",
                    report.violations, report.samples, report.max_gap
                );
                Ok(ExitCode::from(2))
            }
        }
    }
}
