use std::path::PathBuf;
use std::process::ExitCode;

use atombeam::io::{run, Subcommand};
use clap::Parser;

/// Rydberg atomic receiver beamforming experiments.
#[derive(Debug, Parser)]
#[command(name = "atombeam", version)]
struct Cli {
    /// One of: susceptibility, pattern, snr-sweep, seg-sweep, capacity, oracle-check.
    subcommand: Subcommand,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Also write an SVG line plot next to the CSV.
    #[arg(long)]
    svg: bool,
    /// Overrides `[run] seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli.subcommand, &cli.config, &cli.out, cli.svg, cli.seed) {
        Ok(path) => {
            log::info!("wrote {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
