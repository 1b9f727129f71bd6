use std::process::ExitCode;

fn main() -> ExitCode {
    bvp_core::cli::init_logging();
    let code = bvp_core::cli::main_with_args(std::env::args_os());
    ExitCode::from(code as u8)
}
