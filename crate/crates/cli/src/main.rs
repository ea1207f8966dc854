use std::process::ExitCode;

use clap::Parser;
use pvol_cli::args::Cli;
use pvol_cli::{run, EXIT_ERROR};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
