use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(aoi_cli::run(std::env::args_os()))
}
