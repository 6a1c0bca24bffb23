//! `l0cert` — certify, solve, and brute-force-verify ℓ0-Bregman relaxations.
//!
//! ```text
//! l0cert <gen|certify|solve|verify|sweep> --config run.cfg [--seed N] [--out DIR] [--threads N]
//! ```
//!
//! See the library crate docs for the configuration format and the exit-code
//! contract (0 ok, 2 bad config, 3 numerical failure or theory violation,
//! 4 certificate not applicable).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use l0cert::commands::{self, Invocation};
use l0cert::config::Config;

#[derive(Parser)]
#[command(
    name = "l0cert",
    about = "Landscape certification harness for exact \u{2113}0 relaxations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file (sectioned key=value text).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the instance seed from the config.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory for reports, generated instances, and dumps.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance and write its files.
    Gen,
    /// Compute the curvature certificate and the certified λ₀ interval.
    Certify,
    /// Run the forward–backward solver at the configured λ₀ values.
    Solve,
    /// Certify, then cross-check every λ₀ against exhaustive enumeration.
    Verify,
    /// Run the full pipeline over a seeded grid of instances.
    Sweep,
}

fn run(cli: Cli) -> l0cert::Result<bool> {
    let Some(config_path) = &cli.config else {
        return Err(l0cert::Error::Config("--config is required".into()));
    };
    if let Some(threads) = cli.threads {
        // A second initialization (e.g. in tests) is harmless; the pool is
        // already running and determinism never depends on thread count.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let cfg = Config::load(config_path)?;
    let inv = Invocation { seed: cli.seed, out: cli.out.clone() };
    let output = match cli.command {
        Command::Gen => commands::cmd_gen(&cfg, &inv)?,
        Command::Certify => commands::cmd_certify(&cfg, &inv)?,
        Command::Solve => commands::cmd_solve(&cfg, &inv)?,
        Command::Verify => commands::cmd_verify(&cfg, &inv)?,
        Command::Sweep => commands::cmd_sweep(&cfg, &inv)?,
    };
    print!("{}", output.report.summary());
    Ok(output.not_applicable)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("certificate not applicable; see the report for details");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
