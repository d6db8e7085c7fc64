use clap::Parser;

fn main() {
    std::process::exit(nlh_cli::main_with(nlh_cli::Cli::parse()));
}
