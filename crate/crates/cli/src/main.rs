use std::process::ExitCode;

fn main() -> ExitCode {
    lowrank_cli::cli::run_from(std::env::args_os())
}
