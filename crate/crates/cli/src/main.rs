use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mixcert_cli::commands;
use mixcert_cli::config::RunConfig;
use mixcert_cli::error::{CliError, CliResult};
use mixcert_core::dynamics::StateVector;

#[derive(Parser)]
#[command(
    name = "mixcert",
    version,
    about = "Simulation, surrogate-learning and randomized-certification workbench for mixed-therapy feedback laws"
)]
struct Cli {
    /// JSON run configuration; defaults apply for any omitted key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Workspace root for command outputs (each command writes to
    /// <out>/<command>/).
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,

    /// Worker-thread override (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one closed-loop therapy and emit its time series and labels.
    Simulate {
        /// Initial state as six comma-separated numbers T,N,L,C,M,I.
        #[arg(long)]
        x0: Option<String>,
        /// Draw the patient coefficients at this uncertainty level.
        #[arg(long)]
        zeta: Option<f64>,
        /// Run the drug-free flow instead of the feedback law.
        #[arg(long)]
        zero_feedback: bool,
    },
    /// Generate the labeled learning cloud.
    Generate,
    /// Fit the five full-feature surrogates.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Rank features, select reduced sets and refit.
    Sensitivity {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Tabulate certification sample sizes (bound vs published reference).
    Certify,
    /// Build the (T0, C0) success-region dashboard per uncertainty level.
    Dashboard {
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Expected drug-usage curves over T0 for fixed C0 lines.
    Curves {
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Re-simulate feasible dashboard cells and cross-check the surrogate
    /// probabilities.
    Validate {
        #[arg(long)]
        cells: Option<PathBuf>,
    },
}

fn parse_x0(text: &str) -> CliResult<StateVector> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 6 {
        return Err(CliError::Config(format!(
            "--x0 needs six comma-separated numbers, got {}",
            parts.len()
        )));
    }
    let mut values = [0.0f64; 6];
    for (slot, part) in values.iter_mut().zip(parts.iter()) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|e| CliError::Config(format!("--x0 component {part:?}: {e}")))?;
    }
    Ok(StateVector::from_array(values))
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }
    if cfg.workers > 0 {
        // Ignore the error when a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global();
    }
    let root = cli.out;
    match cli.command {
        Command::Simulate { x0, zeta, zero_feedback } => {
            let opts = commands::simulate::SimulateOptions {
                x0: x0.as_deref().map(parse_x0).transpose()?,
                zeta,
                zero_feedback,
            };
            commands::simulate::run(&cfg, &root, &opts)
        }
        Command::Generate => commands::generate::run(&cfg, &root),
        Command::Train { dataset } => commands::train::run(&cfg, &root, dataset),
        Command::Sensitivity { dataset, models } => {
            commands::sensitivity::run(&cfg, &root, dataset, models)
        }
        Command::Certify => commands::certify::run(&cfg, &root),
        Command::Dashboard { models } => commands::dashboard::run(&cfg, &root, models),
        Command::Curves { models } => commands::curves::run(&cfg, &root, models),
        Command::Validate { cells } => commands::validate::run(&cfg, &root, cells),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
