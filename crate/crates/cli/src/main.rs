use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = cct_cli::Cli::parse();
    match cct_cli::execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprint!("{failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
