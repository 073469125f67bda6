use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use qdgate_cli::{parse_config_with_mode, run, Mode};

#[derive(Parser)]
#[command(name = "qdgate", version, about = "Open-system CNOT and Toffoli simulations for quantum-dot spin qubits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one initial state and write its trajectory
    Simulate(RunArgs),
    /// Sweep the field gradient and write P_up at the flip time
    Sweep(RunArgs),
    /// Compute operating ranges in table form
    Ranges(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding output.dir
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, overriding run.workers
    #[arg(long)]
    workers: Option<usize>,
    /// Accepted for compatibility; runs are deterministic
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(mode: Mode, args: RunArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut spec = parse_config_with_mode(&text, Some(mode)).with_context(|| format!("in {}", args.config.display()))?;
    if let Some(out) = args.out {
        spec.output_dir = out;
    }
    if let Some(w) = args.workers {
        anyhow::ensure!(w >= 1, "--workers must be at least 1");
        spec.workers = w;
    }
    let _ = args.seed;
    let report = run(&spec)?;
    for f in &report.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::Ranges(a) => (Mode::Ranges, a),
    };
    match execute(mode, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
