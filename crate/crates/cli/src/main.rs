//! `plcsim`: run power-line noise experiments from JSON configs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plc_core::experiment::{
    emit_csv, emit_periodic, load_config, run_ber, run_capacity, run_mitigate, run_periodic, ExperimentConfig,
};
use plc_core::Error;

#[derive(Parser)]
#[command(name = "plcsim", version, about = "Narrowband PLC impulse-noise experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity table (C1, C2, C3) for a Mixed Gaussian config.
    Capacity(Io),
    /// Monte Carlo uncoded BER.
    Ber(Io),
    /// Noise spectrum at the receiver DFT for periodic noise.
    Periodic(Io),
    /// Nulling/clipping threshold sweep.
    Mitigate(Io),
}

#[derive(Args)]
struct Io {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Config(Error),
    Runtime(Error),
}

fn load(io: &Io) -> Result<ExperimentConfig, Failure> {
    let mut cfg = load_config(&io.config).map_err(Failure::Config)?;
    if let Some(seed) = io.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn classify(e: Error) -> Failure {
    if e.is_config_error() {
        Failure::Config(e)
    } else {
        Failure::Runtime(e)
    }
}

fn run(cmd: &Command) -> Result<&Path, Failure> {
    let io = match cmd {
        Command::Capacity(io) | Command::Ber(io) | Command::Periodic(io) | Command::Mitigate(io) => io,
    };
    let cfg = load(io)?;
    let out = io.out.as_path();
    let result = match cmd {
        Command::Capacity(_) => run_capacity(&cfg).and_then(|rows| emit_csv(&rows, out)),
        Command::Ber(_) => run_ber(&cfg).and_then(|rows| emit_csv(&rows, out)),
        Command::Periodic(_) => run_periodic(&cfg).and_then(|r| emit_periodic(&r, out)),
        Command::Mitigate(_) => run_mitigate(&cfg).and_then(|rows| emit_csv(&rows, out)),
    };
    result.map(|()| out).map_err(classify)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(out) => {
            eprintln!("wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Err(Failure::Config(e)) => {
            eprintln!("plcsim: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("plcsim: {e}");
            ExitCode::from(2)
        }
    }
}
