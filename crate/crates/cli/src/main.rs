use std::process::ExitCode;

use clap::Parser;
use outlyingness_cli::args::Cli;
use outlyingness_cli::{run, CliError, Outcome};

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SPADIMO_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("SPADIMO_THREADS must be a count, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = configure_threads().and_then(|()| run(&cli.command));
    match outcome {
        Ok(o) => ExitCode::from(o.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Outcome::Failed.exit_code() as u8)
        }
    }
}
