//! `fdia` — reproducible pipeline for grid measurement simulation, stealth
//! false-data-injection synthesis, and graph-detector training.
//!
//! Exit codes: 0 on success, 2 on configuration errors (bad flags, missing
//! or malformed files, inconsistent inputs), 3 on numerical failures
//! (divergence, singular systems).

mod commands;
mod config;

use clap::Parser;

fn main() {
    let cli = config::Cli::parse();
    if let Err(e) = commands::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(if e.is_config() { 2 } else { 3 });
    }
}
