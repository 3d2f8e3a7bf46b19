//! Experiment runner for SPAD optical wireless link studies.
//!
//! Exit codes: 0 success, 1 i/o failure, 2 configuration error,
//! 3 infeasible link (background saturates the array), 4 numeric failure.

mod config;
mod experiment;

use clap::Parser;
use config::ExperimentConfig;
use experiment::RunError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "spad-owc",
    about = "SPAD optical wireless link experiments: constellation design, BER and rate sweeps, CSV output",
    long_about = None
)]
struct Args {
    /// Configuration file; every key is optional and defaults apply
    #[arg(short, long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override a config entry, e.g. --set mc.seed=7 or --set experiment=rate_vs_power
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,

    /// Print the fully resolved configuration and exit
    #[arg(long)]
    print_config: bool,
}

fn resolve_config(args: &Args) -> Result<ExperimentConfig, RunError> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| {
            RunError::Config(config::ConfigError {
                line: 0,
                message: format!("cannot read {}: {e}", path.display()),
            })
        })?,
        None => String::new(),
    };
    let mut cfg = ExperimentConfig::parse(&text)?;
    for s in &args.set {
        cfg.apply_set(s)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match resolve_config(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if args.print_config {
        print!("{}", cfg.serialize());
        return ExitCode::SUCCESS;
    }
    match experiment::run_experiment(&cfg) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                RunError::Config(_) => ExitCode::from(2),
                RunError::Core(spad_owc::Error::InfeasibleLink { .. }) => ExitCode::from(3),
                RunError::Core(_) => ExitCode::from(4),
                RunError::Io(_) => ExitCode::from(1),
            }
        }
    }
}
