use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(kesbn::cli::run(std::env::args_os()))
}
