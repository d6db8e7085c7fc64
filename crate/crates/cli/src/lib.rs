//! Batch front end: run configs in, CSV and JSON summaries out.
//!
//! Exit codes: 0 success, 1 suspect verdict or failed `--check` assertion,
//! 2 configuration error, 3 numerical error.

pub mod commands;
pub mod config;

pub use commands::{run, Outcome};
pub use config::{resolve, Cli, CliCommand, Command, RunConfig};

use std::io::Write;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<nonlocal_hardy::Error> for CliError {
    fn from(e: nonlocal_hardy::Error) -> Self {
        if e.is_config_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

fn write_out(path: Option<&std::path::Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Resolves, runs on a pool of `--workers` threads and writes outputs.
pub fn execute(cli: Cli) -> Result<Outcome, CliError> {
    let (command, args) = cli.command.split();
    let cfg = resolve(command, &args)?;
    let outcome = match args.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?;
            pool.install(|| run(&cfg, args.check))?
        }
        None => run(&cfg, args.check)?,
    };
    write_out(cfg.out.as_deref(), &outcome.csv)?;
    if let Some(p) = &cfg.json_summary {
        let text = serde_json::to_string_pretty(&outcome.summary).expect("summary serializes");
        std::fs::write(p, text + "\n")?;
    }
    Ok(outcome)
}

/// `execute` plus diagnostics on stderr; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    match execute(cli) {
        Ok(o) => {
            for f in &o.failures {
                eprintln!("nlh: {f}");
            }
            o.exit_code()
        }
        Err(e) => {
            eprintln!("nlh: {e}");
            e.exit_code()
        }
    }
}
