use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use corrbelief::metrics::KlDirection;
use corrbelief_cli::commands::{cmd_densities, cmd_generate, cmd_score, cmd_simulate, load_study, serve};
use corrbelief_cli::CliError;

/// Elicit, simulate and score beliefs about correlations.
///
/// Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 invalid configuration.
#[derive(Parser)]
#[command(name = "corrbelief", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    /// KL(elicited ‖ predicted)
    ElicitedPredicted,
    /// KL(predicted ‖ elicited)
    PredictedElicited,
}

#[derive(Subcommand)]
enum Command {
    /// Generate correlated datasets (defaults to ρ ∈ {0, ±0.4, ±0.9} at n = 100).
    Generate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a simulated-participant fleet through the session service.
    Simulate {
        /// Study config with a `fleet` section.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Density summaries of elicited means and CI widths per variable pair.
    Densities {
        /// Export bundle: a simulate output directory or a bundle JSON file.
        bundle: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        include_excluded: bool,
    },
    /// Recompute model predictions and fit scores from an export bundle.
    Score {
        bundle: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "elicited-predicted")]
        kl_direction: Direction,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Serve the session HTTP API.
    Serve {
        /// Study config(s); repeat for several studies.
        #[arg(long, required = true)]
        config: Vec<PathBuf>,
        /// Overrides every study's seed.
        #[arg(long, env = "CORRBELIEF_SEED")]
        seed: Option<u64>,
        /// Directory for session event logs.
        #[arg(long, env = "CORRBELIEF_DATA", default_value = "sessions")]
        out: PathBuf,
        #[arg(long, env = "CORRBELIEF_LISTEN", default_value = "127.0.0.1:8080")]
        listen: String,
    },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { config, seed, out } => {
            cmd_generate(config.as_deref(), seed, &out)?;
        }
        Command::Simulate { config, seed, out, jobs } => {
            let m = cmd_simulate(&config, seed, &out, jobs)?;
            if let Some(s) = m.summary {
                eprintln!("{} sessions, {} trials, {} excluded", s.sessions, s.trials, s.excluded_sessions);
            }
        }
        Command::Densities { bundle, seed, out, include_excluded } => {
            cmd_densities(&bundle, seed, &out, include_excluded)?;
        }
        Command::Score { bundle, seed, out, kl_direction, jobs } => {
            let direction = match kl_direction {
                Direction::ElicitedPredicted => KlDirection::ElicitedPredicted,
                Direction::PredictedElicited => KlDirection::PredictedElicited,
            };
            cmd_score(&bundle, seed, &out, direction, jobs)?;
        }
        Command::Serve { config, seed, out, listen } => {
            let configs = config.iter().map(|p| load_study(p, seed)).collect::<Result<Vec<_>, _>>()?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(configs, &out, &listen))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
