//! Command-line surface for the marker detection library: detection,
//! chessboard finding, synthetic corpus generation and a per-stage
//! micro-benchmark.
//!
//! Exit codes are a stable contract: 0 success, 2 usage/config/IO errors,
//! 3 when a requested object was not found (chessboard missing, corpus
//! verification failed).

use std::fmt;

pub mod args;
pub mod cmd_bench;
pub mod cmd_chessboard;
pub mod cmd_detect;
pub mod cmd_synth;
pub mod io;
pub mod output;
pub mod synth;
pub mod threads;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable/invalid files, inconsistent configuration.
    Config(String),
    /// The input was valid but the requested object is not there.
    NotFound(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NotFound(_) => 3,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{}", msg),
            CliError::NotFound(msg) => write!(f, "{}", msg),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("I/O error: {}", e))
    }
}

pub fn run(cli: args::Cli) -> Result<(), CliError> {
    match cli.command {
        args::Command::Detect(a) => cmd_detect::run(a),
        args::Command::Chessboard(a) => cmd_chessboard::run(a),
        args::Command::Synth(a) => cmd_synth::run(a),
        args::Command::Bench(a) => cmd_bench::run(a),
    }
}
