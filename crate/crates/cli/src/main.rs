//! `optonoise {transduce|simulate|calibrate|budget} --config <file> [--out <dir>] [--seed N] [--sweep-power]`

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::ModeArg;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "optonoise",
    version,
    about = "Laser frequency noise and sideband-cooling toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `simulation.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analytic transduction: detuning sweep and fixed-detuning spectrum.
    Transduce(Common),
    /// Monte-Carlo measurement producing a raw/background bundle.
    Simulate(Common),
    /// Converts a bundle into an absolute frequency-noise spectrum.
    Calibrate {
        /// Bundle directory or its manifest.json.
        #[arg(long, alias = "bundle")]
        config: PathBuf,
        /// Defaults to `<bundle>/calibrated`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "ratio-at-tone")]
        mode: ModeArg,
    },
    /// Cooling budget report.
    Budget {
        #[command(flatten)]
        common: Common,
        /// Also write n_f over a logarithmic power grid.
        #[arg(long)]
        sweep_power: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Transduce(c) => {
            let cfg = commands::load(&c.config)?;
            commands::transduce(&cfg, &commands::out_dir(&cfg, c.out.as_deref()), c.seed)
        }
        Command::Simulate(c) => {
            let cfg = commands::load(&c.config)?;
            commands::simulate(&cfg, &commands::out_dir(&cfg, c.out.as_deref()), c.seed)
        }
        Command::Calibrate { config, out, mode } => {
            commands::calibrate(&config, out.as_deref(), mode).map(|_| ())
        }
        Command::Budget {
            common,
            sweep_power,
        } => {
            let cfg = commands::load(&common.config)?;
            commands::budget(
                &cfg,
                &commands::out_dir(&cfg, common.out.as_deref()),
                common.seed,
                sweep_power,
            )
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
