mod commands;
mod serve;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use twinarm_core::harness::HarnessError;

#[derive(Parser, Debug)]
#[command(name = "twinarm", version, about = "Physical-twin teleoperation of tendon-driven continuum arms")]
struct Cli {
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Trace load figures with the demonstrator and report executor deviation.
    Experiment(commands::ExperimentArgs),
    /// Equilibrium under the configured tip load for every stiffness profile.
    Stiffness(commands::OutArgs),
    /// Narrow-gap scenario: entry, lateral search, rotational search, retraction.
    GapDemo(commands::OutArgs),
    /// Stream a live session and serve the operator console feed over WebSocket.
    Serve(serve::ServeArgs),
    /// Drive the executor from a recorded trace.
    Replay(commands::ReplayArgs),
}

/// Process exit status for each failure class.
pub enum Failure {
    Validation(String),
    Transport(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Transport(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Transport(m) | Failure::Other(m) => m,
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else if e.is_transport() {
            Failure::Transport(e.to_string())
        } else {
            Failure::Other(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = commands::load_config(cli.config.as_deref()).and_then(|cfg| match cli.command {
        Command::Experiment(args) => commands::experiment(cfg, args),
        Command::Stiffness(args) => commands::stiffness(cfg, args),
        Command::GapDemo(args) => commands::gap_demo(cfg, args),
        Command::Serve(args) => serve::serve(cfg, args),
        Command::Replay(args) => commands::replay(cfg, args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
