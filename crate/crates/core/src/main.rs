use clap::Parser;

fn main() {
    let cli = sicle::cli::Cli::parse();
    std::process::exit(sicle::cli::run(cli));
}
