use std::io::Write;
use std::process::ExitCode;

use slagwall_cli::{run, Early};

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(std::env::args_os().collect(), &mut lock) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(Early::Info(text))) => {
            let _ = write!(lock, "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let _ = lock.flush();
            eprintln!("slagwall: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
