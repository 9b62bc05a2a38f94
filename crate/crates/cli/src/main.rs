//! `elstm`: generate or sample knowledge bases, run the full
//! saturate-encode-train-sweep pipeline, inspect a model's support layer,
//! or re-score prediction files.
//!
//! Exit codes: 0 success, 1 config error, 2 stage failure.

mod commands;
mod config;

use anyhow::Result;
use clap::{Parser, Subcommand};
use config::Config;
use elstm_core::seeding::derive_seed;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "elstm", version, about = "EL+ completion reasoning emulated with LSTMs")]
struct Cli {
    /// Experiment config file (key = value sections).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides every stage seed derived from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output root; holds kbs/ and run-<hash>/ directories.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Caps the worker threads used for folds and sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic KBs or sample an ontology into <out>/kbs/.
    Generate,
    /// Saturate, encode, cross-validate and sweep per the config.
    Run,
    /// Decode a Deep/Piecewise checkpoint's support layer at one step.
    Inspect {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        kb: PathBuf,
        #[arg(long, default_value_t = 1)]
        step: usize,
    },
    /// Re-score a prediction file against a KB's completion.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        kb: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<Config> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("--config is required for this subcommand"))?;
    let mut cfg = Config::load(path)?;
    if let Some(seed) = cli.seed {
        // The override is part of the effective config, so it participates
        // in the run-directory hash.
        cfg.raw.push_str(&format!("\n# seed-override {seed}\n"));
        cfg.gen.seed = seed;
        cfg.train_seed = derive_seed(seed, 1);
        cfg.eval_seed = derive_seed(seed, 2);
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }

    let result: Result<()> = match &cli.command {
        Command::Generate => match load_config(&cli) {
            Ok(cfg) => commands::cmd_generate(&cfg, &cli.out),
            Err(e) => return config_error(e),
        },
        Command::Run => match load_config(&cli) {
            Ok(cfg) => commands::cmd_run(&cfg, &cli.out),
            Err(e) => return config_error(e),
        },
        Command::Inspect { checkpoint, kb, step } => commands::cmd_inspect(checkpoint, kb, *step),
        Command::Eval { predictions, kb } => commands::cmd_eval(predictions, kb),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn config_error(e: anyhow::Error) -> ExitCode {
    eprintln!("config error: {e:#}");
    ExitCode::from(1)
}
