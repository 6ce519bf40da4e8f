use clap::Parser;

fn main() {
    let cli = markerfind::args::Cli::parse();
    if let Err(e) = markerfind::run(cli) {
        eprintln!("error: {}", e);
        std::process::exit(e.exit_code());
    }
}
