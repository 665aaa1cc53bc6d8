use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use jbshap_cli::{run, Command};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    Explain,
    Attack,
    Axioms,
    Metrics,
    TrainDensity,
    TrainSurrogate,
}

/// Shapley attributions with joint baselines.
#[derive(Debug, Parser)]
#[command(name = "jbshap", version)]
struct Args {
    #[arg(value_enum)]
    command: Sub,
    /// JSON config for the subcommand.
    #[arg(long)]
    config: PathBuf,
    /// Top-level seed; every stage derives its own stream from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cmd = match args.command {
        Sub::Explain => Command::Explain,
        Sub::Attack => Command::Attack,
        Sub::Axioms => Command::Axioms,
        Sub::Metrics => Command::Metrics,
        Sub::TrainDensity => Command::TrainDensity,
        Sub::TrainSurrogate => Command::TrainSurrogate,
    };
    let result = run(cmd, &args.config, args.seed).and_then(|out| {
        out.write_to(&args.out)?;
        Ok(out)
    });
    match result {
        Ok(out) => {
            print!("{}", out.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("jbshap {}: {e}", cmd.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
