use std::process::ExitCode;

use clap::Parser;
use rbmhit::cli::{run, CliArgs};

fn main() -> ExitCode {
    let args = CliArgs::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rbmhit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
