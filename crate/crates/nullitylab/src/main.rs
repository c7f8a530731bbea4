use clap::Parser;
use nullitylab::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
