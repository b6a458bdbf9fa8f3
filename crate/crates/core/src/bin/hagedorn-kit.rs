use std::process::ExitCode;

fn main() -> ExitCode {
    hagedorn_kit::cli::main_with_args(std::env::args_os())
}
