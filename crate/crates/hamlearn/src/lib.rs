//! Files, configuration and experiment drivers on top of `hamlearn-core`.
//!
//! The `hamlearn` binary wraps [`run_command`]; everything it writes goes to
//! one output directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod output;
pub mod selftest;

pub use config::RunConfig;
pub use error::{Error, Result};

use output::OutDir;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Generate,
    Learn,
    Scaling,
    Landscape,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Learn => "learn",
            Command::Scaling => "scaling",
            Command::Landscape => "landscape",
            Command::Selftest => "selftest",
        }
    }
}

/// Runs one subcommand into `out`. Returns whether it succeeded; only
/// `selftest` can report failure without an error.
pub fn run_command(cmd: Command, cfg: &RunConfig, out: &std::path::Path, args: &[String]) -> Result<bool> {
    let out = OutDir::create(out)?;
    out.record_run(cmd.name(), cfg, args)?;
    match cmd {
        Command::Generate => commands::generate::run(cfg, &out).map(|_| true),
        Command::Learn => commands::learn::run(cfg, &out).map(|_| true),
        Command::Scaling => commands::scaling::run(cfg, &out).map(|_| true),
        Command::Landscape => commands::landscape::run(cfg, &out).map(|_| true),
        Command::Selftest => {
            let rep = selftest::run(cfg.selftest.corrupt.as_deref(), &out)?;
            print!("{}", selftest::table(&rep));
            Ok(rep.all_pass)
        }
    }
}
