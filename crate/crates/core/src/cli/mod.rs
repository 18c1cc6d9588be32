//! `porconv` command-line front end.
//!
//! Exit codes: 0 success, 2 a check failed (or a sweep row errored), 3 no
//! convergence or no similarity solution, 64 usage or configuration error,
//! 74 output I/O error.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;

/// Environment override for the sweep worker count.
pub const WORKERS_ENV: &str = "PORCONV_WORKERS";

/// A failure that ends the command with a specific exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self::new(EXIT_IO, format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParameter(_) | Error::Config(_) | Error::GridMismatch => EXIT_USAGE,
            Error::Io(_) => EXIT_IO,
            _ => EXIT_NOT_CONVERGED,
        };
        CliError::new(code, e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "porconv", version, about = "Steady free convection in a porous enclosure")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the coupled system and write fields, convergence history and report.
    Solve2d(ConfigArgs),
    /// Shoot a boundary-layer similarity profile.
    Similarity(SimilarityArgs),
    /// Run every estimate check on the configured problem.
    Verify(ConfigArgs),
    /// Solve a grid of scaled variants of a base problem.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Single thread, sequential kernels.
    #[arg(long)]
    pub deterministic: bool,
    /// Seed for the random test fields of `verify`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Concurrent solves; overrides the environment and the config.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseArg {
    Temp,
    Flux,
    General,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SimilarityArgs {
    #[arg(long = "case", value_enum)]
    pub case: CaseArg,
    #[arg(long)]
    pub m: f64,
    #[arg(long, required_unless_present = "gamma_from_omega", conflicts_with = "gamma_from_omega")]
    pub gamma: Option<f64>,
    /// Derive γ from the wall velocity ω and the `--constant` values.
    #[arg(long, value_name = "OMEGA")]
    pub gamma_from_omega: Option<f64>,
    /// Physical constant override `NAME=VALUE` (rho_inf, beta, g, k, mu,
    /// lambda, A); unset constants are 1.
    #[arg(long = "constant", value_name = "NAME=VALUE", requires = "gamma_from_omega")]
    pub constants: Vec<String>,
    /// Coefficient a of `f''' + a f f'' - b f'^2 = 0` (general case only).
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Far-field tolerance on |f'(t_max)|.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub bracket: Option<Vec<f64>>,
    /// Every solution in the bracket; profiles go to `<out>_<k>.csv`.
    #[arg(long)]
    pub all: bool,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parse `args` (including the program name), run, and return the exit code.
/// Diagnostics go to stderr, summaries to stdout.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve2d(a) => commands::solve2d(&a),
        Command::Similarity(a) => commands::similarity(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Sweep(a) => commands::sweep(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(args)
    }

    #[test]
    fn help_and_version_are_not_errors() {
        for flag in ["--help", "--version"] {
            assert!(!parse(&["porconv", flag]).unwrap_err().use_stderr());
        }
    }

    #[test]
    fn bad_flags_are_errors() {
        let bad: [&[&str]; 3] = [
            &["porconv", "frobnicate"],
            &["porconv", "similarity", "--case", "temp", "--m", "1", "--out", "x.csv"],
            &["porconv", "similarity", "--case", "temp", "--m", "1", "--gamma", "0", "--gamma-from-omega", "0", "--out", "x.csv"],
        ];
        for args in bad {
            assert!(parse(args).unwrap_err().use_stderr(), "{args:?}");
        }
    }

    #[test]
    fn negative_bracket_parses() {
        let cli = Cli::try_parse_from([
            "porconv", "similarity", "--case", "temp", "--m", "-0.5", "--gamma", "0", "--bracket", "-2", "-0.5", "--out", "p.csv",
        ])
        .unwrap();
        let Command::Similarity(a) = cli.command else { panic!() };
        assert_eq!(a.bracket, Some(vec![-2.0, -0.5]));
        assert_eq!(a.m, -0.5);
    }

    #[test]
    fn error_codes_follow_the_kind() {
        assert_eq!(CliError::from(Error::InvalidParameter("x".into())).code, EXIT_USAGE);
        assert_eq!(
            CliError::from(Error::LinearNonConvergence { iterations: 1, residual: 1.0 }).code,
            EXIT_NOT_CONVERGED
        );
    }
}
