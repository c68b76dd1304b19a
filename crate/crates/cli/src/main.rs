mod args;
mod commands;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Select(a) => commands::select(&a),
        Command::Ablate(a) => commands::ablate(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::Inspect(a) => commands::inspect(&a),
    }
}

/// Errors are reported on a single stderr line so scripts can parse them.
fn report(msg: &str) {
    let line = msg.trim().trim_start_matches("error:").trim();
    let line = line.lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join(" ");
    eprintln!("error: {line}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // clap appends usage and a help hint; keep only the message.
            let text = e.to_string();
            report(text.split("\n\n").next().unwrap_or(&text));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e.to_string());
            e.exit_code()
        }
    }
}
