use clap::Parser;
use stoq_cli::{run, Cli};

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("{}", e.line());
        std::process::exit(e.exit_code());
    }
}
