use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use svgd::experiment::{cmd_chaos, cmd_run, Overrides};

/// Stein variational gradient descent experiments.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run SVGD and write trace.csv, final_particles.csv and report.json.
    Run { config: PathBuf },
    /// Run the finite-particle sweep and write chaos.csv and chaos_report.json.
    Chaos { config: PathBuf },
    /// Run the built-in derivative and consistency checks.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let overrides = Overrides {
        output_dir: cli.out,
        seed: cli.seed,
    };
    let code = match cli.command {
        Command::Run { config } => cmd_run(&config, &overrides),
        Command::Chaos { config } => cmd_chaos(&config, &overrides),
        Command::Selftest => svgd::selftest::cmd_selftest(),
    };
    ExitCode::from(code as u8)
}
