use clap::Parser;

fn main() {
    let cli = qkgeom_cli::Cli::parse();
    std::process::exit(qkgeom_cli::run(&cli));
}
