use std::{ path::PathBuf, process::ExitCode };

use clap::Parser;

/// Run a rydmech experiment described by a `key = value` config file.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Config file.
    config: PathBuf,
    /// Print the protocol segment table instead of running.
    #[arg(long)]
    explain: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    ExitCode::from(rydmech::cli::main_with(&args.config, args.explain) as u8)
}
