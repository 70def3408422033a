use clap::Parser;
use hyperorbit_cli::{run, Command, RunOptions};
use std::path::PathBuf;
use std::process::ExitCode;

/// Random frequently hypercyclic vectors: certificates and orbit experiments.
#[derive(Parser)]
#[command(name = "hyperorbit", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Also write SVG line plots.
    #[arg(long)]
    plot: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed_override: Option<u64>,
    #[arg(long)]
    horizon: Option<i64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions { out: cli.out, plot: cli.plot, seed_override: cli.seed_override, horizon: cli.horizon };
    match run(&text, cli.command, &opts) {
        Ok(outcome) => {
            let m = &outcome.manifest;
            for c in &m.certificates {
                println!("{:<24} {:<13} {}", c.name, c.verdict, c.detail);
            }
            println!("outputs in {}", outcome.out_dir.display());
            if !m.failing.is_empty() {
                eprintln!("failing certificates: {}", m.failing.join(", "));
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
