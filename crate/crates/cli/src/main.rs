use std::process::ExitCode;

fn main() -> ExitCode {
    repro_cli::main_entry()
}
