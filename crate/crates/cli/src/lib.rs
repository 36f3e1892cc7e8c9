//! Front end for the `bbar-core` experiments: flag and config-file handling,
//! command dispatch, and CSV/JSON emission.
//!
//! Exit codes: 0 success, 1 a check failed, 2 configuration error,
//! 3 domain or node-validity error.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod schema;

use config::{Cli, Command, ConfigFile, RunConfig};
pub use error::{CliError, Outcome};

/// Resolves the settings for `command` and runs it.
pub fn run(config: Option<&std::path::Path>, command: &Command) -> Result<Outcome, CliError> {
    let file = match config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let cfg = RunConfig::resolve(command.name(), command.flags(), &file)?;
    match command {
        Command::Eval(_) => commands::eval(&cfg),
        Command::Modulus(_) => commands::modulus(&cfg),
        Command::Check(_) => commands::check(&cfg),
        Command::Sweep(_) => commands::sweep(&cfg),
        Command::ListFunctions(_) => commands::list_functions(&cfg),
        Command::Calibrate(_) => commands::calibrate_table(&cfg),
    }
}

/// Parses the process arguments and runs; returns the exit code.
pub fn main_with(cli: Cli) -> std::process::ExitCode {
    if cli.schema {
        let text = serde_json::to_string_pretty(&schema::schema()).expect("schema serializes");
        println!("{text}");
        return std::process::ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: no command given; see `bbar --help`");
        return std::process::ExitCode::from(2);
    };
    match run(cli.config.as_deref(), &command) {
        Ok(outcome) => outcome.into(),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::from(e.exit_code())
        }
    }
}
