//! Command-line front-end: one subcommand per pipeline stage plus a
//! config-driven `pipeline` run.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod render;
pub mod stages;

use std::ffi::OsString;

use clap::Parser;

use crate::commands::Cli;
use crate::error::CliError;

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 1 on runtime errors, 2 on usage errors.
pub fn run_subcommand<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::run(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            let mut message = e.to_string();
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                if !message.contains(&s.to_string()) {
                    message += &format!(": {s}");
                }
                source = s.source();
            }
            eprintln!("error: {message}");
            match e {
                CliError::Usage(_) => 2,
                _ => 1,
            }
        }
    }
}
