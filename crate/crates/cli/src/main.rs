use std::process::ExitCode;

use clap::Parser;
use prime_sphere_cli::{run, Command, Flags};

/// Prime points on k-spheres: enumeration, multipliers, kernels and norm scans.
#[derive(Debug, Parser)]
#[command(name = "prime-sphere", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.flags.resolve().and_then(|config| {
        let written = run(cli.command, &config)?;
        for path in written {
            println!("wrote {}", path.display());
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
