use clap::Parser;

fn main() {
    let cli = adlreq_cli::Cli::parse();
    if let Err(e) = adlreq_cli::run(cli) {
        eprintln!("adlreq: {e}");
        std::process::exit(e.exit_code());
    }
}
