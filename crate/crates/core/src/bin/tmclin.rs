use clap::Parser;

fn main() {
    let cli = tsetlin_clinical::cli::Cli::parse();
    if let Err(e) = tsetlin_clinical::cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
