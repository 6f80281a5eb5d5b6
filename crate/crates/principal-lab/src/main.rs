use clap::Parser;

fn main() -> std::process::ExitCode {
    principal_lab::cli::main_with(principal_lab::cli::Cli::parse())
}
