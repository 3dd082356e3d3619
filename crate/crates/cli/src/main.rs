use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;
use tsbench_cli::{cmd_build, cmd_characterize, cmd_report, cmd_run, cmd_synth, load_config, CliResult};

/// Evaluation pipeline for cross-sectional stock forecasting models.
///
/// Exit codes: 0 success, 2 invalid config or arguments, 3 data or I/O
/// failure, 4 pipeline stage failure, 5 archive format mismatch.
#[derive(Parser)]
#[command(name = "tsbench", version)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for independent predictor runs.
    #[arg(long, global = true, value_name = "INT")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic panel and its ground-truth labels.
    Synth,
    /// Ingest, normalize, segment and split into a labelled dataset.
    Build,
    /// Per-pattern characteristics table.
    Characterize,
    /// Train, predict, backtest, score and archive every predictor.
    Run,
    /// Comparison table and cumulative-return curves of run archives.
    Report {
        #[arg(required = true, value_name = "ARCHIVE")]
        archives: Vec<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let config = || load_config(cli.config.as_deref(), cli.seed, cli.out.as_deref());
    match &cli.command {
        Command::Synth => {
            for p in cmd_synth(&config()?)? {
                println!("{}", p.display());
            }
        }
        Command::Build => {
            for p in cmd_build(&config()?)? {
                println!("{}", p.display());
            }
        }
        Command::Characterize => println!("{}", cmd_characterize(&config()?)?.display()),
        Command::Run => println!("{}", cmd_run(&config()?, cli.jobs)?.dir.display()),
        Command::Report { archives } => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let files = cmd_report(archives, &out)?;
            for p in [files.table_csv, files.table_markdown, files.cumulative_csv] {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
