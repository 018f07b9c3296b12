use clap::Parser;
use driftwave::cli::{execute, Cli};

fn main() {
    std::process::exit(execute(Cli::parse()));
}
