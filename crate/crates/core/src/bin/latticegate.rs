use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use latticegate::cli::{self, Command};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Ramsey,
    VisibilityScan,
    Interference,
    InterferenceScan,
    Cluster,
    Percolation,
    Calibrate,
    /// Regenerate all figure data from the bundled recipes.
    Figures,
}

/// Controlled-collision entanglement simulator.
#[derive(Debug, Parser)]
#[command(name = "latticegate", version)]
struct Args {
    command: Cmd,
    /// Experiment config (TOML). Not used by `figures`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Ok(n) = std::env::var(cli::THREADS_ENV) {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: {} must be a positive integer, got {n:?}", cli::THREADS_ENV);
                return ExitCode::from(2);
            }
        }
    }
    let result = match args.command {
        Cmd::Figures => cli::run_figure_recipes(&args.out, args.seed),
        other => {
            let command = match other {
                Cmd::Ramsey => Command::Ramsey,
                Cmd::VisibilityScan => Command::VisibilityScan,
                Cmd::Interference => Command::Interference,
                Cmd::InterferenceScan => Command::InterferenceScan,
                Cmd::Cluster => Command::Cluster,
                Cmd::Percolation => Command::Percolation,
                Cmd::Calibrate => Command::Calibrate,
                Cmd::Figures => unreachable!(),
            };
            let Some(config) = args.config else {
                eprintln!("error: --config <path> is required for `{}`", command.name());
                return ExitCode::from(2);
            };
            cli::run_config_file(&config, command, args.seed, &args.out)
        }
    };
    match result {
        Ok(a) => {
            for line in &a.summary {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
