use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    ttg_cli::run(ttg_cli::Cli::parse())
}
