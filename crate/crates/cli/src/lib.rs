//! Command-line front end for the `diamond-core` library.
//!
//! Subcommands: `keygen`, `send`, `recv`, `bench`, `energy` and `vectors`.
//! Exit codes: 0 success, 1 general failure, 2 authentication reject,
//! 3 desynchronization, 4 malformed or structurally invalid input, 64 usage.

use std::ffi::OsString;

use clap::Parser;
use thiserror::Error;

pub mod bench;
mod commands;
pub mod energy;
pub mod keyfile;
pub mod vectors;

pub use commands::Cli;

pub const EXIT_AUTH: i32 = 2;
pub const EXIT_DESYNC: i32 = 3;
pub const EXIT_MALFORMED: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] diamond_core::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad key file: {0}")]
    KeyFile(String),

    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Check(String),

    #[error("{rejected} of {envelopes} envelopes failed authentication")]
    Rejected { rejected: u64, envelopes: u64 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use diamond_core::Error as E;
        match self {
            CliError::Rejected { .. } | CliError::Core(E::AuthenticationFailed) => EXIT_AUTH,
            CliError::Core(E::Desync { .. }) => EXIT_DESYNC,
            CliError::Core(E::Malformed { .. } | E::Structural(_) | E::UnknownScheme(_)) => EXIT_MALFORMED,
            CliError::Usage(_) => EXIT_USAGE,
            _ => 1,
        }
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("diamond: {e}");
            e.exit_code()
        }
    }
}
