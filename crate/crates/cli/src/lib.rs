//! The `polyavg` command line: counting, verification suites, exponent fits,
//! refinement traces and Riesz-diagram data.
//!
//! [`run`] is the whole program minus process exit, so tests can drive it with
//! in-memory output buffers.

mod commands;
mod config;
mod demo;
mod verify;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{Config, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "polyavg", version, about = "Exact discrete averages along polynomial curves")]
pub struct Cli {
    /// Curve components separated by commas, e.g. "n, n^2"
    #[arg(long, global = true)]
    pub curve: Option<String>,
    /// One or more N values: "32", "8,16,32" or "4:9"
    #[arg(long = "N", global = true)]
    pub n: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Cap on enumerated tuples (and tower chains)
    #[arg(long = "budget-tuples", global = true)]
    pub budget_tuples: Option<u128>,
    /// JSON-lines count cache
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// File for the machine-readable output
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Box dilation constant, a rational such as "1/2"
    #[arg(long = "c-box", global = true)]
    pub c_box: Option<String>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Report elapsed times as 0 so output is byte-stable
    #[arg(long = "no-timing", global = true)]
    pub no_timing: bool,
    /// key=value file; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count solutions of Vinogradov-type systems
    Count(CountArgs),
    /// Run the oracle and invariant suites
    Verify(VerifyArgs),
    /// Fit a scaling exponent over several N
    Exponent(ExponentArgs),
    /// Refine (E, F) and build the tower of parameters
    Refine(RefineArgs),
    /// Region labels over a grid of exponent pairs
    Riesz(RieszArgs),
}

#[derive(Debug, Args)]
pub struct CountArgs {
    /// homogeneous, inhomogeneous or max
    #[arg(long)]
    pub mode: Option<String>,
    /// Number of summands per side (s or k)
    #[arg(long, visible_alias = "k")]
    pub s: Option<usize>,
    /// Target, comma-separated components
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    /// brute, mitm, lemma1, lemma2 or lemma3
    #[arg(long)]
    pub method: Option<String>,
    /// Fraction of cache hits recomputed and compared
    #[arg(long = "audit-rate")]
    pub audit_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Comma-separated suite names (default: all)
    #[arg(long)]
    pub suite: Option<String>,
    /// Random instances per suite
    #[arg(long)]
    pub trials: Option<usize>,
    /// Debug: flip a sign inside the named suite's oracle
    #[arg(long, hide = true)]
    pub fault: Option<String>,
    /// List the suites and exit
    #[arg(long)]
    pub list: bool,
}

#[derive(Debug, Args)]
pub struct ExponentArgs {
    /// dirac, dual, box, count, moment, max or scan
    #[arg(long)]
    pub family: Option<String>,
    /// 1/p as a rational
    #[arg(long = "inv-p")]
    pub inv_p: Option<String>,
    /// 1/q as a rational
    #[arg(long = "inv-q")]
    pub inv_q: Option<String>,
    #[arg(long, visible_alias = "k")]
    pub s: Option<usize>,
    /// Theorem case for the scan family: i, ii or iii
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    /// Set file for E
    #[arg(long)]
    pub e: Option<PathBuf>,
    /// Set file for F
    #[arg(long)]
    pub f: Option<PathBuf>,
    /// Bundled instance: grid, dual, box, far
    #[arg(long)]
    pub demo: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Evaluate at most this many y in E_k
    #[arg(long = "y-cap")]
    pub y_cap: Option<usize>,
    /// Print the JSON trace instead of the text report
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct RieszArgs {
    #[arg(long)]
    pub resolution: Option<u32>,
}

/// A failure with its exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub msg: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, msg: msg.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl From<polyavg_core::Error> for CliError {
    fn from(e: polyavg_core::Error) -> Self {
        let code = match e {
            polyavg_core::Error::Budget(_) => EXIT_BUDGET,
            _ => EXIT_USAGE,
        };
        CliError { code, msg: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::usage(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Runs the program on `args` (including the program name) and returns the exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = if code == EXIT_OK { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> CliResult<i32> {
    let cfg = RunConfig::resolve(&cli)?;
    let threads = cfg.threads;
    // the pool only hosts the computation; output is written afterwards on this thread
    let mut buf: Vec<u8> = Vec::new();
    let code = polyavg_core::with_threads(threads, || commands::dispatch(&cli.command, &cfg, &mut buf))?;
    out.write_all(&buf)?;
    Ok(code)
}
