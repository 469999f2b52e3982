//! `ksn`: train knowledge state networks and run adaptive assessments.

mod commands;
mod config;
mod interactive;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Mode;
use config::{ConfigError, RunConfig};
use ksn_core::ErrorClass;

#[derive(Parser)]
#[command(name = "ksn", version, about = "Adaptive skill assessment with knowledge state networks")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort.
    Synth,
    /// Build the training dataset from the cohort.
    Simulate,
    /// Train a model on the whole cohort.
    Train,
    /// Assess a recorded learner, or interactively when no learner is given.
    Assess {
        #[arg(long, value_enum, default_value = "full")]
        mode: Mode,
        #[arg(long)]
        learner: Option<String>,
    },
    /// Leave-one-out evaluation over the cohort.
    Eval,
    /// Error against training cohort size.
    Sweep,
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        bind: Option<String>,
    },
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    if let Some(core) = e.downcast_ref::<ksn_core::Error>() {
        return match core.class() {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numeric => 4,
            ErrorClass::Runtime => 5,
        };
    }
    if e.downcast_ref::<std::io::Error>().is_some() {
        return 5;
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    match cli.command {
        Command::Synth => commands::synth(&cfg),
        Command::Simulate => commands::simulate(&cfg),
        Command::Train => commands::train_model(&cfg),
        Command::Assess { mode, learner } => commands::assess(&cfg, mode, learner.as_deref()),
        Command::Eval => commands::eval(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Serve { bind } => {
            if let Some(b) = bind {
                cfg.serve.bind = b;
            }
            commands::serve(&cfg)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
