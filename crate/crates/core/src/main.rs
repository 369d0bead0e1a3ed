use std::process::ExitCode;

fn main() -> ExitCode {
    cetsp::cli::main_with_args(std::env::args_os())
}
