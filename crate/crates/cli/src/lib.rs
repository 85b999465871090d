//! Command-line front end for `fermi-entropy`: phase reports, parameter
//! sweeps with cached correlator tables, Widom quadrature and the
//! validation suite.

pub mod args;
pub mod commands;
pub mod config;
pub mod determinism;
pub mod scan;

pub use args::Cli;
pub use commands::run;

/// Why a command did not succeed; maps onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad parameters, config or flags (exit 2).
    Invalid(String),
    /// A check failed or every scan point failed (exit 1).
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}
