use std::process::ExitCode;

fn main() -> ExitCode {
    cogstab::harness::cli::main_with_args(std::env::args_os())
}
