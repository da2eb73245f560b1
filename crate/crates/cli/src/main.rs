use std::process::ExitCode;

use clap::{error::ErrorKind, CommandFactory, Parser};
use subshot_cli::{run, Cli, CliError, Status, THREADS_ENV};

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "{THREADS_ENV} must be a positive integer, got `{v}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.into()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(cli)) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::ValidationFailed(name)) => {
            eprintln!("validation failed: {name}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            let kind = if msg.contains("required argument") {
                ErrorKind::MissingRequiredArgument
            } else {
                ErrorKind::ValueValidation
            };
            Cli::command().error(kind, msg).exit()
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
