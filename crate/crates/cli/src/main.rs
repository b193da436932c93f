use std::process::ExitCode;

use coxbo_cli::CliError;

fn main() -> ExitCode {
    let mut stdout = std::io::stdout().lock();
    match coxbo_cli::run(std::env::args_os(), &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(e)) => e.exit(),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}
