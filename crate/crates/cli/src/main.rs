mod commands;
mod config;
mod error;

use std::io::{BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use riffle_core::combinatorics::{init_global_cache, DEFAULT_PERSIST_THRESHOLD};

use crate::config::{Cli, RunConfig};
use crate::error::{CliError, EXIT_OK, EXIT_VIOLATION};

fn run(cli: &Cli) -> Result<bool, CliError> {
    let config = RunConfig::from_cli(cli)?;
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    if cli.show_config {
        writeln!(out, "{}", config.to_canonical_json())?;
        out.flush()?;
        return Ok(false);
    }
    if let Some(dir) = &config.cache {
        init_global_cache(dir, DEFAULT_PERSIST_THRESHOLD);
    }
    let violated = commands::run(&config, &mut out)?;
    out.flush()?;
    Ok(violated)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(false) => EXIT_OK,
        Ok(true) => EXIT_VIOLATION,
        Err(e) => {
            eprintln!("riffle: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
