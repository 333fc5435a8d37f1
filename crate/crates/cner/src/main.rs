use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    ExitCode::from(cner::cli::run(cner::cli::Cli::parse()))
}
