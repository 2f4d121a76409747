use std::process::ExitCode;

fn main() -> ExitCode {
    mzsim::cli::run()
}
