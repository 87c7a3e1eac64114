use clap::Parser;

use incentive_bandit_cli::args::Cli;
use incentive_bandit_cli::commands;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = commands::dispatch(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
