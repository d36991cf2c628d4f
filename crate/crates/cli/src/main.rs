mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

/// Exit status for an error: 1 for failed checks and searches, 2 for
/// invalid input, 3 for I/O.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<kflat::Error>() {
            return match e {
                kflat::Error::NoPlan(_)
                | kflat::Error::Certification(_)
                | kflat::Error::Degenerate { .. } => 1,
                _ => 2,
            };
        }
        if cause.downcast_ref::<commands::Failed>().is_some() {
            return 1;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
