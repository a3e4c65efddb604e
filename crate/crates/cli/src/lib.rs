//! `qcrack` command-line surface: data generation, training, evaluation,
//! gradient checks, call-ledger tables and device-runtime estimates.
//!
//! Exit codes are stable across commands: 0 success, 1 runtime failure,
//! 2 usage or configuration error.

pub mod commands;
pub mod config;
pub mod error;
pub mod profile;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{DataSource, RunConfig, SplitRatios};
pub use error::{CliError, CliResult, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};
pub use profile::{estimate, BackendProfile, Estimate};

#[derive(Debug, Parser)]
#[command(
    name = "qcrack",
    version,
    about = "Hybrid quantum-classical crack classifier"
)]
pub struct Cli {
    /// Run configuration (JSON). Flags override its keys.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic PGM patches and a manifest.
    Gen(commands::gen::GenArgs),
    /// Train a model and write metrics, report and checkpoint.
    Train(commands::train::TrainArgs),
    /// Evaluate a checkpoint on a test set.
    Eval(commands::eval::EvalArgs),
    /// Compare gradient methods against the exact adjoint gradient.
    Gradcheck(commands::gradcheck::GradcheckArgs),
    /// Predicted circuit calls per epoch for each gradient method.
    Ledger(commands::ledger::LedgerArgs),
    /// Device and wall-clock runtime estimate on a named backend.
    Estimate(commands::estimate::EstimateArgs),
}

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct Globals {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub json: bool,
}

/// Parses `args` (including the program name) and runs the command, writing
/// results to `stdout` and diagnostics to `stderr`. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let globals = Globals {
        config: cli.config,
        seed: cli.seed,
        out: cli.out,
        json: cli.json,
    };
    let result = match cli.command {
        Command::Gen(a) => commands::gen::run(&a, &globals, stdout),
        Command::Train(a) => commands::train::run(&a, &globals, stdout),
        Command::Eval(a) => commands::eval::run(&a, &globals, stdout),
        Command::Gradcheck(a) => commands::gradcheck::run(&a, &globals, stdout),
        Command::Ledger(a) => commands::ledger::run(&a, &globals, stdout),
        Command::Estimate(a) => commands::estimate::run(&a, &globals, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}

pub(crate) fn write_json(out: &mut dyn Write, value: &impl serde::Serialize) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

pub(crate) fn reject_config(globals: &Globals, command: &str) -> CliResult<()> {
    if globals.config.is_some() {
        return Err(CliError::usage(format!("{command} does not read --config")));
    }
    Ok(())
}
