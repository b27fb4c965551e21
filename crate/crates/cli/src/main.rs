use std::process::ExitCode;

use clap::Parser;
use qcr_cli::cli::Cli;
use qcr_cli::commands::{execute, Exit};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QCR_LOG", "error")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                Exit::InputError as u8
            } else {
                0
            });
        }
    };
    let args: Vec<String> = std::env::args().skip(1).collect();
    match execute(&cli.command, args) {
        Ok(outcome) => {
            if outcome.json {
                println!("{}", outcome.report.to_json());
            } else {
                print!("{}", outcome.report.to_text());
            }
            ExitCode::from(outcome.exit as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Exit::InputError as u8)
        }
    }
}
