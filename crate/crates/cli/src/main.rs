use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hidim_cli::commands::{cmd_bayes, cmd_curves, cmd_diagnose, cmd_sweep, with_stdio};

#[derive(Parser)]
#[command(name = "hidim", version, about = "Monte Carlo sweeps of linear classifier error in high dimension")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file and write its CSV (and SVG).
    Sweep { config: PathBuf },
    /// Check the moment identities of the projection statistics.
    Diagnose {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 100_000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the optimal error Q(alpha/2).
    Bayes {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
    },
    /// Emit sorted magnitude profiles of a sparse family.
    Curves { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = with_stdio(|out, err| match cli.command {
        Command::Sweep { config } => cmd_sweep(&config, out, err),
        Command::Diagnose { d, n, beta, reps, seed } => cmd_diagnose(d, n, beta, reps, seed, out, err),
        Command::Bayes { alpha } => cmd_bayes(alpha, out, err),
        Command::Curves { config } => cmd_curves(&config, out, err),
    });
    ExitCode::from(code as u8)
}
