//! Command-line front end: single-point evaluation, grid sweeps to CSV, and
//! error summaries between methods.

pub mod app;
pub mod compare;
pub mod config;
pub mod error;
pub mod sweep;

use std::ffi::OsString;

use clap::Parser;

pub use config::{Method, SimSettings, SweepSpec};
pub use error::{CliError, ConfigError};
pub use sweep::{run_sweep, Row, SweepOptions};

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match app::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                error::EXIT_USAGE
            } else {
                error::EXIT_OK
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match app::execute(&cli.command) {
        Ok(()) => error::EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
