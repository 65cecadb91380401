use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use satsec_cli::{point, run, thread_cap, validate, CliError, RunOptions};

/// Average secrecy rate of finite-blocklength satellite links.
#[derive(Parser)]
#[command(name = "secrecy", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment and write `<experiment>.csv` and `manifest.json`.
    Run {
        config: PathBuf,
        experiment: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Check a config and list every problem with its key path.
    Validate { config: PathBuf },
    /// Evaluate one operating point and print it as JSON.
    Point {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Also run the Monte Carlo estimator.
        #[arg(long)]
        mc: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<u8, CliError> {
    let threads = thread_cap()?;
    match command {
        Command::Run {
            config,
            experiment,
            out,
            seed,
            samples,
        } => {
            let opts = RunOptions {
                seed,
                samples,
                threads,
            };
            let manifest = run(&config, &experiment, &out, &opts)?;
            for a in &manifest.artifacts {
                println!("{}  {} rows  sha256 {}", out.join(&a.file).display(), a.rows, a.sha256);
            }
            Ok(0)
        }
        Command::Validate { config } => {
            let diags = validate(&config)?;
            if diags.is_empty() {
                println!("ok");
                return Ok(0);
            }
            for d in &diags {
                println!("{d}");
            }
            Ok(2)
        }
        Command::Point { config, set, mc } => {
            let report = point(&config, &set, mc, threads)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("JSON report"));
            Ok(0)
        }
    }
}
