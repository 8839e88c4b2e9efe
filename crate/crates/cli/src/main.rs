//! `relperturb`: relative ranks, perturbation expansions, sampling and Monte Carlo experiments.
//!
//! Exit codes: 0 success, 1 an acceptance check failed, 2 usage or configuration error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "relperturb", version, about = "Relative perturbation bounds for covariance spectra")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Directory for output files; results are only printed when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the trial count in the configuration.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Worker threads for Monte Carlo trials.
    #[arg(long, global = true, env = "RELPERTURB_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Relative ranks, gaps and condition cutoffs of a spectrum.
    Rank {
        /// Spectrum file: {"eigenvalues": [...], "eigenvectors": [[...], ...]}.
        #[arg(long)]
        config: PathBuf,
        /// 1-based index; all indices when omitted.
        #[arg(long, conflicts_with = "all")]
        index: Option<usize>,
        #[arg(long)]
        all: bool,
    },
    /// Linear expansions of a perturbed spectrum against exact eigendecompositions.
    Expand {
        #[arg(long)]
        config: PathBuf,
        /// Perturbation file: {"matrix": [[...]]} or {"relative": [[...]]}.
        #[arg(long)]
        perturbation: PathBuf,
        /// Targets such as `eigenvalue:1`, `eigenvector:2`, `block:1`, `projector:1` (1-based).
        #[arg(long = "target")]
        targets: Vec<String>,
        /// 1-based index of the first tail block for block targets.
        #[arg(long)]
        r0: Option<usize>,
    },
    /// Separation test for one eigenvalue at offset `y`.
    Separate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        perturbation: PathBuf,
        #[arg(long)]
        index: usize,
        #[arg(long)]
        offset: f64,
    },
    /// Draws one dataset from a generator configuration.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Runs a Monte Carlo or algebraic experiment.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-checks a saved experiment result and re-renders it.
    Report {
        /// Result JSON written by `experiment --format json`.
        #[arg(long)]
        config: PathBuf,
    },
}

/// Outcome of a command: either success or a failed acceptance check.
pub enum Outcome {
    Ok,
    ChecksFailed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<Outcome> {
    if let Some(t) = cli.global.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global()?;
    }
    let g = &cli.global;
    match cli.command {
        Command::Rank { config, index, all: _ } => commands::rank(g, &config, index),
        Command::Expand { config, perturbation, targets, r0 } => commands::expand(g, &config, &perturbation, &targets, r0),
        Command::Separate { config, perturbation, index, offset } => commands::separate(g, &config, &perturbation, index, offset),
        Command::Simulate { config, trial } => commands::simulate(g, &config, trial),
        Command::Experiment { config } => commands::experiment(g, &config),
        Command::Report { config } => commands::report(g, &config),
    }
}
