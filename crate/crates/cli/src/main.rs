//! `eddy-ddm`: spectral analysis and simulation of the impedance-coupled
//! interface iteration for the eddy-current problem on concentric spheres.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::{CommandError, Outcome};
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "eddy-ddm",
    about = "Modal analysis and interface-iteration toolkit for the eddy-current problem on concentric spheres",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the configuration's out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scaling variant of the beta_C coupling term: paper | asymptotic.
    #[arg(long)]
    variant: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of the interface iteration operator per mode.
    Spectrum(CommonArgs),
    /// Run the interface iteration and record residuals and contraction factors.
    Iterate(CommonArgs),
    /// Direct coupled solve with self-certifying residuals and a field slice.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Also run the iteration and report per-mode deviation from the direct solve.
        #[arg(long)]
        compare_ddm: bool,
    },
    /// Grid search over admissible impedance coefficients.
    Optimize(CommonArgs),
    /// Check admissibility and consistency of the configured coefficients.
    Verify(CommonArgs),
}

fn load(common: &CommonArgs) -> Result<RunConfig, CommandError> {
    let mut config = RunConfig::from_file(&common.config)?;
    config.override_variant(common.variant.as_deref())?;
    Ok(config)
}

fn dispatch(cli: Cli) -> Result<Outcome, CommandError> {
    match &cli.command {
        Command::Spectrum(common) => {
            let config = load(common)?;
            commands::cmd_spectrum(&config, common.out.as_deref())
        }
        Command::Iterate(common) => {
            let config = load(common)?;
            commands::cmd_iterate(&config, common.out.as_deref())
        }
        Command::Solve {
            common,
            compare_ddm,
        } => {
            let config = load(common)?;
            commands::cmd_solve(&config, common.out.as_deref(), *compare_ddm)
        }
        Command::Optimize(common) => {
            let config = load(common)?;
            commands::cmd_optimize(&config, common.out.as_deref())
        }
        Command::Verify(common) => {
            let config = load(common)?;
            commands::cmd_verify(&config)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(outcome) => outcome.code(),
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    };
    std::process::exit(code);
}
