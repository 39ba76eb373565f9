//! Command-line front end. All behavior lives in the library; this binary
//! only parses arguments and maps errors to exit codes (0 success, 1
//! runtime failure, 2 configuration error).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fedft::config::{cmd_generate, cmd_run, cmd_suite, cmd_sweep_alpha, ExperimentConfig, Suite};
use fedft::Error;

#[derive(Parser)]
#[command(name = "fedft", about = "Frequency-space federated learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset file (LEAF-style JSON) from a config.
    Generate {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: the config's output_dir, else `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the dataset generator seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run an experiment from a config, or a named suite.
    Run {
        /// Experiment config (JSON). Required unless --suite is given.
        #[arg(long, conflicts_with = "suite")]
        config: Option<PathBuf>,
        /// Named suite: `paper` (full preset matrix) or `smoke`.
        #[arg(long)]
        suite: Option<String>,
        /// Output directory (default: the config's output_dir, else `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the seed list with a single seed.
        #[arg(long, conflicts_with = "suite")]
        seed: Option<u64>,
        /// Override the suite's communication round count.
        #[arg(long, requires = "suite")]
        rounds: Option<usize>,
        /// Override the suite's seed list (comma separated).
        #[arg(long, requires = "suite", value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Run one experiment per pruning rate and write a summary table.
    Sweep {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Pruning rates to sweep, comma separated (e.g. 0,0.1,0.2).
        #[arg(long, value_delimiter = ',')]
        alphas: Vec<f64>,
        /// Output directory (default: the config's output_dir, else `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the seed list with a single seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn effective_out(cli_out: Option<PathBuf>, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli_out
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run(cli: Cli) -> fedft::Result<()> {
    match cli.command {
        Command::Generate { config, out, seed } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let path = cmd_generate(&cfg, &effective_out(out, Some(&cfg)), seed)?;
            println!("wrote {}", path.display());
        }
        Command::Run {
            config,
            suite,
            out,
            seed,
            rounds,
            seeds,
        } => {
            let paths = match (config, suite) {
                (Some(config), None) => {
                    let cfg = ExperimentConfig::from_path(&config)?;
                    cmd_run(&cfg, &effective_out(out, Some(&cfg)), seed)?
                }
                (None, Some(suite)) => {
                    cmd_suite(suite.parse::<Suite>()?, &effective_out(out, None), rounds, seeds)?
                }
                _ => {
                    return Err(Error::usage(
                        "run requires exactly one of --config or --suite",
                    ))
                }
            };
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Command::Sweep {
            config,
            alphas,
            out,
            seed,
        } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let artifacts = cmd_sweep_alpha(&cfg, &alphas, &effective_out(out, Some(&cfg)), seed)?;
            for p in &artifacts.run_csvs {
                println!("wrote {}", p.display());
            }
            println!("wrote {}", artifacts.summary_csv.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_like() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
