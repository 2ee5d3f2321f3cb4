use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(vmsim_cli::dispatch(std::env::args_os()))
}
