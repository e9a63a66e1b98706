use clap::Parser;
use octopsh::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
