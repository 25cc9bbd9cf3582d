use std::path::PathBuf;
use std::process::ExitCode;

use adaptive_pt_cli::commands::{execute, Command};
use adaptive_pt_cli::config::{ExperimentConfig, Overrides};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adaptive-pt", version, about = "Adaptive parallel tempering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Adapt the ladder, sample at the final ladder, write traces.
    Run(Common),
    /// Same outputs with the geometric or Vousden adapter.
    Baseline(Common),
    /// Correlate swap mean-distance with ACT over random ladders.
    Correlate(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    config: PathBuf,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed, overriding `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trials, overriding `trials`.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads, overriding `threads`.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Run(a) => (Command::Run, a),
        Cmd::Baseline(a) => (Command::Baseline, a),
        Cmd::Correlate(a) => (Command::Correlate, a),
    };
    let result = (|| -> anyhow::Result<PathBuf> {
        let mut cfg = ExperimentConfig::load(&args.config)?;
        cfg.apply(&Overrides {
            output_dir: args.out,
            seed: args.seed,
            trials: args.trials,
            threads: args.threads,
        })?;
        Ok(execute(command, &cfg)?)
    })();
    match result {
        Ok(dir) => {
            println!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
