use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod output;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let outcome = match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Certify(a) => commands::certify(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Audio(a) => commands::audio(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::EXIT_ERROR)
        }
    }
}
