use clap::Parser;

fn main() -> std::process::ExitCode {
    gcnsumm::cli::run(gcnsumm::cli::Cli::parse())
}
