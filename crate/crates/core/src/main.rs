use std::process::ExitCode;

use weightlab::cli::{execute, init_threads, parse_command};

fn main() -> ExitCode {
    let spec = match parse_command(std::env::args_os().skip(1)) {
        Ok(spec) => spec,
        Err(e) => {
            let _ = e.print();
            // usage errors exit with 1 so that 2 keeps meaning "inconclusive"
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let status = init_threads().and_then(|_| execute(&spec));
    match status {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
