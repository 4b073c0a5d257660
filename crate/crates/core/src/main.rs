use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rrlab::labcli::acceptance::run_all;
use rrlab::labcli::config::{key_help, ScenarioConfig};
use rrlab::labcli::scenario::{exit_code, run_to_dir, EXIT_INVALID_CONFIG, EXIT_SUCCESS, EXIT_THRESHOLD};

#[derive(Parser)]
#[command(name = "rrlab", version, about = "Robin-Robin domain decomposition lab for linear parabolic problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a key=value config file and write its CSV.
    #[command(after_help = key_help())]
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Overrides the `seed` key.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the built-in acceptance suite (exit 0 when every criterion holds, 4 otherwise).
    Check,
}

fn run(config: PathBuf, out: PathBuf, seed: Option<u64>) -> i32 {
    let text = match std::fs::read_to_string(&config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("rrlab: cannot read {}: {e}", config.display());
            return EXIT_INVALID_CONFIG;
        }
    };
    let mut cfg = match ScenarioConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("rrlab: invalid config: {e}");
            return EXIT_INVALID_CONFIG;
        }
    };
    if let Some(s) = seed {
        cfg = cfg.with_seed(s);
    }
    match run_to_dir(&cfg, &out) {
        Ok((code, path)) => {
            println!("{} -> {} (exit {code})", cfg.scenario.name(), path.display());
            code
        }
        Err(e) => {
            eprintln!("rrlab: {e}");
            exit_code(&e)
        }
    }
}

fn check() -> i32 {
    let results = run_all();
    for r in &results {
        println!("{r}");
    }
    if results.iter().all(|r| r.passed) {
        EXIT_SUCCESS
    } else {
        EXIT_THRESHOLD
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out, seed } => run(config, out, seed),
        Command::Check => check(),
    };
    ExitCode::from(code as u8)
}
