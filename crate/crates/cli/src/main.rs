//! `commlearn`: config-driven runner for decoder and fiber experiments.

mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{ExperimentConfig, Kind};
use error::CliResult;

#[derive(Debug, Parser)]
#[command(
    name = "commlearn",
    version,
    about = "Run a configured experiment and write CSV results"
)]
struct Args {
    #[arg(value_enum)]
    command: Kind,
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed, overriding the one in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the one in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(args: Args) -> CliResult<()> {
    let cfg = ExperimentConfig::load(&args.config)?.resolve(args.command, args.seed)?;
    let out = run::output_dir(args.out, &cfg);
    log::info!("{} -> {}", args.command.name(), out.display());
    run::run(args.command, &cfg, &out)
}
