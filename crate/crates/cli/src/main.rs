use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gauge_dirac_cli::commands;
use gauge_dirac_cli::config::ExperimentConfig;
use gauge_dirac_cli::exit_with;

#[derive(Parser)]
#[command(name = "gauge-dirac", version, about = "Energy extraction from a Dirac field by pure-gauge pulses")]
struct Cli {
    /// Directory for all output files, overriding configured paths
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single pulse run (pulse.f or pulse.delta_target)
    Extract { config: PathBuf },
    /// Energy change over pulse.f_list with a linear fit
    ScanF { config: PathBuf },
    /// Invariant suite against the dense oracle (n_points <= 64)
    Verify { config: PathBuf },
    /// Integrator against the closed-form pulse over integrator.step_counts
    Convergence { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    let out_dir = cli.out_dir.as_deref();
    let (path, run): (_, fn(&ExperimentConfig, Option<&std::path::Path>) -> _) = match &cli.command {
        Command::Extract { config } => (config, commands::extract),
        Command::ScanF { config } => (config, commands::scan_f),
        Command::Verify { config } => (config, commands::verify),
        Command::Convergence { config } => (config, commands::convergence),
    };
    exit_with(ExperimentConfig::load(path).and_then(|c| run(&c, out_dir)))
}
