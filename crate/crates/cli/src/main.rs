//! `gpu-sentinel`: one binary, subcommand style, for simulating, ingesting,
//! featurizing, training, evaluating, detecting, and reporting on GPU
//! telemetry traces.
//!
//! Exit codes are a stable scripting contract: 0 success, 1 usage error,
//! 2 data/format error, 3 internal error. Detection outcomes never affect
//! the exit code.

mod commands;

use clap::Parser;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "gpu-sentinel",
    version,
    about = "GPU telemetry cryptojacking detection toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: commands::Command,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1u8,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
