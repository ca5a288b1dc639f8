use std::process::ExitCode;

use clap::Parser;
use emsbn_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match emsbn_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.status as u8)
        }
    }
}
