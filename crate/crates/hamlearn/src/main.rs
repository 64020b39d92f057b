use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use hamlearn::{run_command, Command, RunConfig};

#[derive(Clone, Copy, ValueEnum)]
enum Sub {
    Generate,
    Learn,
    Scaling,
    Landscape,
    Selftest,
}

/// Learn spin-chain Hamiltonians from measured bit-strings.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[arg(value_enum)]
    command: Sub,
    /// TOML run configuration; defaults apply to anything it leaves out.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config field, e.g. `--set model.n=8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = match cli.command {
        Sub::Generate => Command::Generate,
        Sub::Learn => Command::Learn,
        Sub::Scaling => Command::Scaling,
        Sub::Landscape => Command::Landscape,
        Sub::Selftest => Command::Selftest,
    };
    let args: Vec<String> = std::env::args().collect();
    let result = RunConfig::load(cli.config.as_deref(), &cli.set, cli.seed).and_then(|cfg| run_command(cmd, &cfg, &cli.out, &args));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("hamlearn {}: {e}", cmd.name());
            ExitCode::from(2)
        }
    }
}
