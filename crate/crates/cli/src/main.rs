use clap::{Parser, Subcommand, ValueEnum};
use memimprint::metrics::{RboConfig, RboVariant};
use memimprint_cli::commands::{self, IngestArgs};
use memimprint_cli::{exit, CliError, CliResult};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "memimprint", version, about = "Memory-imprint tie ranking and its evaluation")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Truncated,
    Extrapolated,
}

#[derive(Subcommand)]
enum Command {
    /// Validate raw events, surveys and schema into a dataset archive.
    Ingest {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        surveys: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tournament ground-truth rankings of a dataset archive.
    Groundtruth {
        dataset: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Staggered three-fold evaluation.
    Evaluate {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-population evaluation.
    Crosseval {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic population.
    Synth {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank-biased overlap of two list files (one id per line).
    Rbo {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 0.98)]
        p: f64,
        #[arg(long, value_enum, default_value = "extrapolated")]
        variant: Variant,
    },
    /// Table of one or more evaluation runs.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Write per-semester scores as CSV.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(e.into()))?;
    }
    eprintln!("jobs: {}", rayon::current_num_threads());
    match cli.command {
        Command::Ingest { events, surveys, schema, name, out } => {
            commands::ingest(IngestArgs {
                events: &events,
                surveys: &surveys,
                schema: &schema,
                name: name.as_deref(),
                out: out.as_deref(),
            })?;
        }
        Command::Groundtruth { dataset, out } => {
            commands::groundtruth(&dataset, out.as_deref())?;
        }
        Command::Evaluate { config, out } => {
            commands::evaluate(&config, out.as_deref())?;
        }
        Command::Crosseval { config, out } => {
            commands::crosseval(&config, out.as_deref())?;
        }
        Command::Synth { config, out } => {
            commands::synth(&config, out.as_deref())?;
        }
        Command::Rbo { a, b, p, variant } => {
            let variant = match variant {
                Variant::Truncated => RboVariant::Truncated,
                Variant::Extrapolated => RboVariant::Extrapolated,
            };
            commands::rbo_files(&a, &b, RboConfig { p, variant })?;
        }
        Command::Report { runs, plot } => {
            commands::report(&runs, plot.as_deref())?;
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { exit::OK };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => std::process::exit(exit::OK),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
