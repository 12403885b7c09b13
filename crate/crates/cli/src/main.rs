use std::process::ExitCode;

fn main() -> ExitCode {
    entlink_cli::run_cli(std::env::args_os())
}
