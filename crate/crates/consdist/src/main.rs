//! `consdist`: deterministic view-consistency distillation sandbox.
//!
//! Exit codes: 0 success, 2 configuration errors (unreadable or invalid
//! config file, bad CONSDIST_SEED, bad usage), 3 runtime failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use consdist::{
    ablate, apply_seed_override, emit, emit_profile, parse_config, run, Error, OutputError,
    RunConfig,
};

#[derive(Parser)]
#[command(name = "consdist", version, about = "View-consistency distillation sandbox")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one distillation and write all output files.
    Run {
        /// Path to a key = value config file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if absent).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the six-cell mode x partial-order grid and write ablation.csv.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one distillation and write only profile.csv.
    Profile {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum AppError {
    Config(String),
    Runtime(String),
}

impl AppError {
    fn from_output(err: OutputError) -> Self {
        match err {
            OutputError::Run(Error::ConfigInvalid(message)) => AppError::Config(message),
            other => AppError::Runtime(other.to_string()),
        }
    }

    fn from_run(err: Error) -> Self {
        match err {
            Error::ConfigInvalid(message) => AppError::Config(message),
            other => AppError::Runtime(other.to_string()),
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, AppError> {
    let mut config = parse_config(path).map_err(|e| AppError::Config(e.to_string()))?;
    let seed = match std::env::var("CONSDIST_SEED") {
        Ok(value) => Some(value),
        Err(std::env::VarError::NotPresent) => None,
        Err(std::env::VarError::NotUnicode(_)) => {
            return Err(AppError::Config("CONSDIST_SEED is not valid UTF-8".into()));
        }
    };
    apply_seed_override(&mut config, seed.as_deref())
        .map_err(|e| AppError::Config(e.to_string()))?;
    Ok(config)
}

fn execute(command: Command) -> Result<PathBuf, AppError> {
    match command {
        Command::Run { config, out } => {
            let config = load_config(&config)?;
            let result = run(&config).map_err(AppError::from_run)?;
            emit(&result, &out).map_err(AppError::from_output)
        }
        Command::Ablate { config, out } => {
            let config = load_config(&config)?;
            ablate(&config, &out).map_err(AppError::from_output)
        }
        Command::Profile { config, out } => {
            let config = load_config(&config)?;
            let result = run(&config).map_err(AppError::from_run)?;
            emit_profile(&result, &out).map_err(AppError::from_output)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(path) => {
            println!("wrote {}", path.display());
            ExitCode::SUCCESS
        }
        Err(AppError::Config(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(AppError::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(3)
        }
    }
}
