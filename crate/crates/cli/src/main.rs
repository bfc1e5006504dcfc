//! `inewton`: experiment runner for the inexact Newton solver.
//!
//! Exit codes: 0 success, 1 run failure, 2 configuration error.

mod config;
mod output;
mod run;
mod sweep;
mod trace;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Run(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Run(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "inewton",
    version,
    about = "Inexact Newton forcing-term experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured strategy; write sweep.csv and per-run JSON traces.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides INEWTON_OUT_DIR and the config file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Record inner-iteration oversolving traces for one step.
    Trace {
        #[arg(long)]
        config: PathBuf,
        /// Step index: 0 for steady problems, accepted-step index for transient ones.
        #[arg(long, default_value_t = 0)]
        step: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in verification checks, one JSON line per check.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sweep { config, out } => sweep_cmd(&config, out.as_deref()),
        Command::Trace { config, step, out } => trace_cmd(&config, step, out.as_deref()),
        Command::Verify { seed } => verify_cmd(seed),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("inewton: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn sweep_cmd(config: &Path, out: Option<&Path>) -> Result<ExitCode, CliError> {
    let cfg = ExperimentConfig::load(config)?;
    let dir = cfg.resolve_out_dir(out);
    let rows = sweep::run_sweep(&cfg, &dir)?;
    print!("{}", sweep::render_csv(&rows));
    eprintln!("inewton: wrote {}", dir.join("sweep.csv").display());
    Ok(ExitCode::SUCCESS)
}

fn trace_cmd(config: &Path, step: usize, out: Option<&Path>) -> Result<ExitCode, CliError> {
    let cfg = ExperimentConfig::load(config)?;
    let dir = cfg.resolve_out_dir(out);
    for p in trace::run_trace(&cfg, step, &dir)? {
        println!("{}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn verify_cmd(seed: u64) -> Result<ExitCode, CliError> {
    let results = verify::run_verification(seed);
    let mut all = true;
    for r in &results {
        all &= r.pass;
        println!(
            "{}",
            serde_json::to_string(r).map_err(|e| CliError::Run(e.to_string()))?
        );
    }
    Ok(if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
