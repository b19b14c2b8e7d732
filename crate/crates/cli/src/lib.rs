//! Command-line front end: decay tables, pipeline runs and reports.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use args::{Cli, Command};
use commands::Failure;
use config::ScenarioConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_STAGE: i32 = 2;
pub const EXIT_UNVERIFIED: i32 = 3;

/// Runs one invocation and returns the process exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Opa(a) => ScenarioConfig::resolve(a, None, None)
            .map_err(Failure::Usage)
            .and_then(|cfg| commands::cmd_opa(&cfg, out)),
        Command::Pipeline(a) => ScenarioConfig::resolve(&a.common, a.sigma_n.clone(), a.inner)
            .map_err(Failure::Usage)
            .and_then(|cfg| commands::cmd_pipeline(&cfg, out)),
        Command::SigmaBounds(a) => ScenarioConfig::resolve(&a.common, a.sigma_n.clone(), a.inner)
            .map_err(Failure::Usage)
            .and_then(|cfg| commands::cmd_sigma_bounds(&cfg, out)),
        Command::Specrad(a) => ScenarioConfig::resolve(&a.common, None, None)
            .map_err(Failure::Usage)
            .and_then(|cfg| commands::cmd_specrad(&cfg, a.tuple.as_deref(), a.random.as_deref(), out)),
        Command::Linearize(a) => ScenarioConfig::resolve(&a.common, None, None)
            .map_err(Failure::Usage)
            .and_then(|cfg| commands::cmd_linearize(&cfg, a.samples, out)),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            let _ = writeln!(err, "error: a postcondition check failed");
            EXIT_UNVERIFIED
        }
        Err(Failure::Usage(e)) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_USAGE
        }
        Err(Failure::Stage(e)) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_STAGE
        }
    }
}
