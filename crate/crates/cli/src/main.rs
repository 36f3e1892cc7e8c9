use bbar_cli::config::Cli;
use clap::Parser;

fn main() -> std::process::ExitCode {
    bbar_cli::main_with(Cli::parse())
}
