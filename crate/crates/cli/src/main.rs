use std::process::ExitCode;

use clap::Parser;
use hoverbeam_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("hoverbeam: cannot configure {n} threads: {e}");
            return ExitCode::from(3);
        }
    }
    match run(&cli) {
        Ok(manifest) => {
            println!(
                "{}: wrote {} files to {}",
                manifest.command,
                manifest.files.len(),
                cli.out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hoverbeam: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
