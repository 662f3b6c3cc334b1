use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use optexec_cli::{execute, Invocation};

/// Solve, simulate, sweep or validate an optimal execution problem.
#[derive(Debug, Parser)]
#[command(name = "optexec", version)]
struct Args {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and simulations.
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides sim.seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let inv = Invocation {
        config: args.config,
        out: args.out,
        jobs: args.jobs,
        seed: args.seed,
    };
    match execute(&inv) {
        Ok(outcome) => {
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            println!("{}", outcome.summary);
            ExitCode::from(outcome.status.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
