use clap::Parser;
use lmsf_cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = execute(cli) {
        eprintln!("lmsf: {e}");
        std::process::exit(e.exit_code());
    }
}
