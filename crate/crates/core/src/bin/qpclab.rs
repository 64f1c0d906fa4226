use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(qpclab::cli::run(std::env::args_os()))
}
