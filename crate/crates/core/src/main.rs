use clap::Parser;

fn main() {
    let cli = pcsft::cli::Cli::parse();
    if let Err(e) = pcsft::cli::run_command(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
