use clap::Parser;
use tolpred_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("tolpred: {e}");
        std::process::exit(e.code());
    }
}
