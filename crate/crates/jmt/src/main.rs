use std::process::ExitCode;

fn main() -> ExitCode {
    jmt::cli::run()
}
