//! Argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fermi_entropy::ZeroModePolicy;

use crate::config::OutputFormat;

#[derive(Debug, Parser)]
#[command(name = "fermi-entropy", version, about = "Block entanglement entropy of lattice fermions with p-wave pairing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Phase label, co-dimension, g(0) trend and gap estimate for one point.
    Phase(PhaseArgs),
    /// Entropy series, scaling fits and Widom prefactors over a (lambda, gamma) grid.
    #[command(after_help = SCAN_BUDGETS)]
    Scan(ScanArgs),
    /// Widom prefactor C from the Fermi surface (Phase I only).
    Widom(WidomArgs),
    /// Density-of-states histogram of the quasiparticle energy.
    Dos(DosArgs),
    /// Real-space correlators along the first lattice axis and their decay.
    Correlators(CorrelatorArgs),
    /// Runs the numerical acceptance checks.
    Validate(ValidateArgs),
}

const SCAN_BUDGETS: &str = "\
Desk-scale budgets: d = 2 up to L = 40 (1600 x 1600 eigenproblems), d = 3 up to L = 12
(1728 x 1728). Larger blocks work but cost grows as L^(3d).

Outputs in --out-dir: entropy.csv (lambda,gamma,dim,L,S_bits), fits.csv
(lambda,gamma,dim,model,C,B,A,residual,verdict), errors.csv and records.jsonl.
With --format json the three tables are written as .json arrays instead.";

#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    /// Chemical potential parameter (>= 0).
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Pairing amplitude (>= 0).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub gamma: f64,
    /// Lattice dimension (1, 2 or 3).
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
}

/// `csv` means plain text or CSV on stdout; `json` a single JSON document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ZeroModes {
    /// Fail on momenta with vanishing quasiparticle energy.
    Reject,
    /// Occupy them with probability 1/2.
    HalfFill,
}

impl From<ZeroModes> for ZeroModePolicy {
    fn from(z: ZeroModes) -> Self {
        match z {
            ZeroModes::Reject => ZeroModePolicy::Reject,
            ZeroModes::HalfFill => ZeroModePolicy::HalfFill,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Samples per axis for the gap and DOS estimates (default 4096, 256, 64 for d = 1, 2, 3).
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// JSON sweep configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated lambda values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub lambda: Option<Vec<f64>>,
    /// Comma-separated gamma values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub gamma: Option<Vec<f64>>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Smallest block size computed (default 2).
    #[arg(long)]
    pub l_min: Option<usize>,
    /// Largest block size computed.
    #[arg(long)]
    pub l_max: Option<usize>,
    /// Smallest block size kept in the scaling fits.
    #[arg(long)]
    pub fit_l_min: Option<usize>,
    /// Momentum samples per axis (must be >= 8 L_max).
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Half-step-shifted momentum grid (default).
    #[arg(long, overrides_with = "no_shifted")]
    pub shifted: bool,
    #[arg(long, overrides_with = "shifted")]
    pub no_shifted: bool,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Directory for cached correlator tables.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub zero_modes: Option<ZeroModes>,
}

impl ScanArgs {
    pub fn shifted(&self) -> Option<bool> {
        match (self.shifted, self.no_shifted) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct WidomArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Surface grid per axis (default 1024 for d <= 2, 128 for d = 3).
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Also write the Fermi-surface elements to this CSV file.
    #[arg(long)]
    pub surface_csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Args)]
pub struct DosArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Samples per axis (default 4096, 256, 64 for d = 1, 2, 3).
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long, default_value_t = 64)]
    pub bins: usize,
    #[arg(long, value_enum, default_value_t)]
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Args)]
pub struct CorrelatorArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Largest separation reported.
    #[arg(long, default_value_t = 32)]
    pub r_max: usize,
    /// Momentum samples per axis (default: the scan default for L = r_max).
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long, overrides_with = "no_shifted")]
    pub shifted: bool,
    #[arg(long, overrides_with = "shifted")]
    pub no_shifted: bool,
    #[arg(long, value_enum, default_value = "reject")]
    pub zero_modes: ZeroModes,
    #[arg(long, value_enum, default_value_t)]
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InjectedFault {
    /// Negate the anomalous correlator before the oracle comparison.
    AnomalousSign,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Comma-separated check ids (1-10); all when absent.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<u32>>,
    /// Test hook that deliberately breaks a computation.
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<InjectedFault>,
    /// Cache directory for the determinism check, which deliberately corrupts
    /// its contents (a temporary directory by default).
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: ReportFormat,
}
