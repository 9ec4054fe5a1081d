//! `spo`: sectoral portfolio optimization from the command line.

mod commands;
mod config;

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use config::{CliError, CliResult, RunConfig};
use spo_core::synth::SyntheticSpec;

#[derive(Parser)]
#[command(name = "spo", version, about = "Sectoral portfolio optimization toolkit")]
struct Cli {
    /// Worker threads for window-parallel runs (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic prices, ratios, sectors and a benchmark.
    Synth {
        /// Output directory for the CSV files.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 24)]
        assets: usize,
        #[arg(long, default_value_t = 6)]
        sectors: usize,
        #[arg(long, default_value_t = 200)]
        weeks: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// First price date.
        #[arg(long)]
        start: Option<NaiveDate>,
        /// Skip writing the ready-to-run config.json next to the data.
        #[arg(long)]
        no_config: bool,
    },
    /// PCA per sector and over all assets; write loadings and extraction reports.
    Extract(ConfigArgs),
    /// Rolling-window backtest over every configured model.
    Backtest {
        #[command(flatten)]
        args: ConfigArgs,
        /// Comma-separated model subset overriding the config list.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<String>>,
    },
    /// One fit per configured market phase.
    Phases(ConfigArgs),
    /// Dominance audit of a saved weights file.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// A weights.csv produced by `backtest`.
        #[arg(long)]
        weights: PathBuf,
        /// Write the audit rows here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    match cli.command {
        Command::Synth { out, assets, sectors, weeks, seed, start, no_config } => {
            let mut spec = SyntheticSpec { n_assets: assets, n_sectors: sectors, weeks, seed, ..Default::default() };
            if let Some(start) = start {
                spec.start = start;
            }
            commands::cmd_synth(&spec, &out, !no_config)
        }
        Command::Extract(args) => {
            let cfg = RunConfig::from_file(&args.config)?;
            commands::cmd_extract(&cfg, &args.out)
        }
        Command::Backtest { args, models } => {
            let mut cfg = RunConfig::from_file(&args.config)?;
            if let Some(models) = models {
                cfg.models = models;
                cfg.validate()?;
            }
            commands::cmd_backtest(&cfg, &args.out)
        }
        Command::Phases(args) => {
            let cfg = RunConfig::from_file(&args.config)?;
            commands::cmd_phases(&cfg, &args.out)
        }
        Command::Verify { config, weights, out } => {
            let cfg = RunConfig::from_file(&config)?;
            commands::cmd_verify(&cfg, &weights, out.as_deref())
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
