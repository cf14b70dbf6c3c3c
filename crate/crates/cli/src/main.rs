use std::process::ExitCode;

use clap::Parser;
use deform_cli::commands::{dispatch, Command, Status};

/// Flatten discretized manifolds with the autonomous deforming field.
#[derive(Debug, Parser)]
#[command(name = "deform", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Unstable) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
