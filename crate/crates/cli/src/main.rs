use clap::Parser;
use kscc_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = kscc_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
