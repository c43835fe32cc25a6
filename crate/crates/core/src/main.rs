use std::process::ExitCode;

use clap::Parser;
use fockskin_core::cli::{emit, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command).and_then(|outcome| emit(&outcome).map(|()| outcome.success)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
