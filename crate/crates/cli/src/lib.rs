//! Command-line front end for hodgecurl-core: configuration, MSH input,
//! report assembly and the invariant suite behind `verify`.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod msh;
pub mod report;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use commands::{run, Outcome};
pub use config::{Command, RunConfig};
pub use error::{CliError, ParseError};

/// Environment variable capping internal parallelism; unset means one
/// thread.
pub const THREADS_VAR: &str = "HODGECURL_THREADS";

fn threads_from_env() -> Result<usize, CliError> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(1),
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("{THREADS_VAR} must be a non-negative integer, got {s:?}"))),
    }
}

/// Runs a resolved config and writes the report. Returns the exit status.
pub fn run_config(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let outcome = run(cfg)?;
    let text = report::to_string(&outcome.report);
    match &cfg.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| CliError::Output { path: path.clone(), source: e })?,
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Output { path: "<stdout>".into(), source: e })?,
    }
    if let Some(dir) = &cfg.sidecar {
        outcome.sidecars.write_all(dir)?;
    }
    Ok(outcome.exit_code)
}

/// Full command-line entry point. The report goes to `stdout` (or
/// `--out`); diagnostics go to `stderr`.
pub fn execute<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match config::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let benign = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let text = e.render().to_string();
            if benign {
                let _ = stdout.write_all(text.as_bytes());
                return 0;
            }
            let _ = stderr.write_all(text.as_bytes());
            return 1;
        }
    };
    let (command, flags) = cli.command.split();
    let result = threads_from_env().and_then(|n| {
        hodgecurl_core::linalg::set_threads(n);
        let cfg = config::resolve(command, flags)?;
        run_config(&cfg, stdout)
    });
    match result {
        Ok(code) => {
            if code == error::EXIT_VERIFY_FAILED {
                let _ = writeln!(stderr, "hodgecurl: verify: at least one check failed");
            }
            code
        }
        Err(e) => {
            let _ = writeln!(stderr, "hodgecurl: {e}");
            e.exit_code()
        }
    }
}
