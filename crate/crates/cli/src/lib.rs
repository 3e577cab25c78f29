//! `lgw` command-line front end.

pub mod commands;
pub mod record;
pub mod state;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use lgw_core::fock::DEFAULT_DIM;

pub use record::ResultRecord;

pub const EXIT_OK: i32 = 0;
/// A sweep found a property violation, or a computation failed at run time.
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NOT_CERTIFIED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] lgw_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use lgw_core::Error as E;
        match self {
            CliError::Parse(_) | CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Core(e) => match e {
                E::UnphysicalOptimizer { .. } => EXIT_NOT_CERTIFIED,
                E::IllConditioned(_) => EXIT_FAILURE,
                _ => EXIT_VALIDATION,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "lgw",
    version,
    about = "Local Gaussian work extraction toolkit"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Seed for optimizer restarts and sweeps.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Fock truncation dimension per mode.
    #[arg(long = "fock-dim", global = true, default_value_t = DEFAULT_DIM)]
    pub fock_dim: usize,
    /// Override the command's tolerance (freeness gap, certification, sweep bound).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Optimizer restarts for N ≥ 3 activity.
    #[arg(long, global = true, default_value_t = 16)]
    pub restarts: usize,
    /// Emit the JSON result record instead of a table.
    #[arg(long, global = true)]
    pub json: bool,
}

/// States are given as a JSON file path, inline JSON, or `preset:NAME:PARAMS`
/// (vacuum, thermal:NBAR, coherent:RE[:IM], squeezed:R[:PHI], tms:R, fock:N).
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Relative entropy of local activity.
    Activity {
        #[arg(long)]
        state: String,
    },
    /// Extractable work and the extraction protocol.
    Work {
        #[arg(long)]
        state: String,
    },
    /// Von Neumann entropy.
    Entropy {
        #[arg(long)]
        state: String,
    },
    /// Relative entropy S(state || reference).
    Relent {
        #[arg(long)]
        state: String,
        #[arg(long)]
        reference: String,
        /// Also evaluate it on the truncated Fock space (single mode).
        #[arg(long)]
        fock_check: bool,
    },
    /// Williamson and Bloch-Messiah decompositions.
    Decompose {
        #[arg(long)]
        state: String,
    },
    /// Spectral and structural freeness tests.
    Freecheck {
        #[arg(long)]
        state: String,
    },
    /// Thermal loss channel. ETA is the amplitude transmittance: the
    /// covariance matrix maps to η²Γ + (1−η²)(n̄_τ+½)I.
    Channel {
        #[arg(long)]
        state: String,
        #[arg(long)]
        eta: f64,
        #[arg(long = "nbar-tau", default_value_t = 0.0)]
        nbar_tau: f64,
        /// Apply the Kraus operators on the truncated Fock space.
        #[arg(long)]
        fock: bool,
    },
    /// Distillation demonstrations.
    Demo {
        #[command(subcommand)]
        which: Demo,
    },
    /// Seeded property sweeps over random instances.
    Sweep {
        #[arg(long, value_enum, default_value_t = Property::All)]
        property: Property,
        #[arg(long, default_value_t = 200)]
        count: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum Demo {
    /// Two copies of diag(1,16,1,1)/2 through the 4-mode DFT.
    DistillActivity,
    /// Swap that concentrates work onto one pair.
    DistillWork {
        #[arg(long = "state-a", default_value = "preset:squeezed:1")]
        state_a: String,
        #[arg(long = "state-b", default_value = "preset:vacuum")]
        state_b: String,
    },
    /// |1,1⟩ through a balanced beam splitter, post-selected on vacuum.
    FockPostselect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Property {
    Work,
    Decompose,
    Nogo,
    Free,
    Activity,
    All,
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    stdout: text,
                    stderr: String::new(),
                    code: EXIT_OK,
                },
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => Outcome {
                    stdout: String::new(),
                    stderr: text,
                    code: EXIT_USAGE,
                },
                _ => Outcome {
                    stdout: String::new(),
                    stderr: text,
                    code: EXIT_VALIDATION,
                },
            };
        }
    };
    match commands::dispatch(&cli) {
        Ok((record, code)) => Outcome {
            stdout: if cli.common.json {
                record.to_json() + "\n"
            } else {
                record.to_table()
            },
            stderr: match code {
                EXIT_NOT_CERTIFIED => "optimizer result not certified\n".into(),
                EXIT_FAILURE => "property violation\n".into(),
                _ => String::new(),
            },
            code,
        },
        Err(e) => Outcome {
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
            code: e.exit_code(),
        },
    }
}
