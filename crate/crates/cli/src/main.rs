use std::process::ExitCode;

fn main() -> ExitCode {
    resjump_cli::app::main()
}
