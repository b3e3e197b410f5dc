use clap::Parser;
use ginivar::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("ginivar: {e}");
        std::process::exit(e.exit_code());
    }
}
