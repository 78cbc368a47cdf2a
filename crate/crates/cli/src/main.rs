use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = dass_cli::app::Cli::parse();
    match dass_cli::app::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
