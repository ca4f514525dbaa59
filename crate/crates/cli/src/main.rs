use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use speckle_sense::commands::{cmd_eval, cmd_generate, cmd_render, cmd_sweep, cmd_train, parse_indices, Loaded};
use speckle_sense::pipeline::Subset;
use speckle_sense::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "speckle-sense", version, about = "Speckle recognition experiments")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the scenario master seed (generate, sweep) or training seed (train).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (directory for render).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scenario into a dataset file.
    Generate {
        #[arg(long)]
        digits: Option<PathBuf>,
        #[arg(long)]
        per_class: Option<usize>,
    },
    /// Train a classifier on a dataset.
    Train {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Evaluate params on one side of the configured split.
    Eval {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        subset: Subset,
    },
    /// Generate, train and evaluate; write accuracy per sweep point.
    Sweep {
        #[arg(long)]
        digits: Option<PathBuf>,
        #[arg(long)]
        per_class: Option<usize>,
    },
    /// Write dataset frames as 8-bit PGM images.
    Render {
        #[arg(long)]
        dataset: PathBuf,
        /// Comma-separated indices or ranges, e.g. `0,4,10-19`.
        #[arg(long)]
        indices: String,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let out = cli
        .out
        .as_deref()
        .ok_or_else(|| CliError::Usage("--out is required".into()))?;
    let loaded = || Loaded::from_path(cli.config.as_deref());
    let manifest = match &cli.command {
        Command::Generate { digits, per_class } => {
            cmd_generate(&loaded()?, digits.as_deref(), *per_class, cli.seed, out)?
        }
        Command::Train { dataset } => cmd_train(&loaded()?, dataset, cli.seed, out)?,
        Command::Eval {
            params,
            dataset,
            subset,
        } => cmd_eval(&loaded()?, params, dataset, *subset, out)?,
        Command::Sweep { digits, per_class } => cmd_sweep(&loaded()?, digits.as_deref(), *per_class, cli.seed, out)?,
        Command::Render { dataset, indices } => cmd_render(dataset, &parse_indices(indices)?, out)?,
    };
    for a in &manifest.outputs {
        println!("{}  {}", a.sha256, a.path);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("speckle-sense: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
