//! `pgmtext` — train and benchmark probabilistic text classifiers.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pgmtext_cli::commands::{cmd_benchmark, cmd_evaluate, cmd_prepare, cmd_report, cmd_train};
use pgmtext_cli::config::ExperimentConfig;
use pgmtext_cli::{CliError, Result};

#[derive(Parser)]
#[command(name = "pgmtext", version, about = "Probabilistic graphical model text classification")]
struct Cli {
    /// Worker threads (default: all cores). Env: PGMTEXT_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Override the run seed. Env: PGMTEXT_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory. Env: PGMTEXT_OUT.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Load, split and vectorize the dataset; write artifacts + manifest.
    Prepare(CommonArgs),
    /// Train the configured model (prepares implicitly when needed).
    Train(CommonArgs),
    /// Evaluate a trained model and write precision/recall/F1 reports.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Model file (default: <out>/model.txt).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Evaluate on an external dataset instead of the held-out split.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run several experiment configs and aggregate a summary grid.
    Benchmark {
        /// Experiment config files (repeatable).
        #[arg(long, required = true, num_args = 1..)]
        config: Vec<PathBuf>,
        /// Aggregate output directory (default: benchmark-output).
        /// Env: PGMTEXT_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render a results CSV as an aligned table.
    Report {
        /// results.csv produced by evaluate or benchmark.
        #[arg(long)]
        results: PathBuf,
        /// Output format (default: text). Env: PGMTEXT_FORMAT.
        #[arg(long, value_parser = ["text", "csv"])]
        format: Option<String>,
    },
}

fn env_u64(name: &str) -> Option<u64> {
    std::env::var(name).ok().and_then(|v| v.parse().ok())
}

fn env_path(name: &str) -> Option<PathBuf> {
    std::env::var(name).ok().map(PathBuf::from)
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed.or_else(|| env_u64("PGMTEXT_SEED")) {
        cfg.seed = seed;
        // Model specs capture the run seed at parse time; refresh them.
        match &mut cfg.model {
            pgmtext_cli::config::ModelSpec::Logreg(c)
            | pgmtext_cli::config::ModelSpec::Svm(c) => c.seed = seed,
            pgmtext_cli::config::ModelSpec::Hmm(c) => c.seed = seed,
            _ => {}
        }
    }
    if let Some(out) = common.out.clone().or_else(|| env_path("PGMTEXT_OUT")) {
        cfg.out = out;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(threads) = cli.threads.or_else(|| env_u64("PGMTEXT_THREADS").map(|t| t as usize)) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }

    match cli.command {
        Command::Prepare(common) => {
            let cfg = load_config(&common)?;
            let prepared = cmd_prepare(&cfg)?;
            eprintln!(
                "prepared {} train rows / {} test rows into {}",
                prepared.manifest.train_rows,
                prepared.manifest.test_rows,
                cfg.out.display()
            );
            Ok(false)
        }
        Command::Train(common) => {
            let cfg = load_config(&common)?;
            let path = cmd_train(&cfg)?;
            eprintln!("model written to {}", path.display());
            Ok(false)
        }
        Command::Evaluate { common, model, data } => {
            let cfg = load_config(&common)?;
            cmd_evaluate(&cfg, model.as_deref(), data.as_deref())?;
            let report = std::fs::read_to_string(cfg.out.join("report.txt"))?;
            print!("{report}");
            Ok(false)
        }
        Command::Benchmark { config, out } => {
            let out = out
                .or_else(|| env_path("PGMTEXT_OUT"))
                .unwrap_or_else(|| PathBuf::from("benchmark-output"));
            let (grid, any_failed) = cmd_benchmark(&config, &out)?;
            print!("{grid}");
            Ok(any_failed)
        }
        Command::Report { results, format } => {
            let format = format
                .or_else(|| std::env::var("PGMTEXT_FORMAT").ok())
                .unwrap_or_else(|| "text".to_string());
            if format != "text" && format != "csv" {
                return Err(CliError::Config(format!("unknown format `{format}`")));
            }
            let rendered = cmd_report(&results, &format)?;
            print!("{rendered}");
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
