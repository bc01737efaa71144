use std::process::ExitCode;

use clap::Parser;
use epigauge_cli::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let code = match run(&cli).and_then(|o| emit(&cli, o)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("epigauge: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn emit(cli: &Cli, outcome: epigauge_cli::Outcome) -> Result<i32, CliError> {
    match &cli.global.out {
        Some(path) => std::fs::write(path, &outcome.output)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => print!("{}", outcome.output),
    }
    if !outcome.notes.is_empty() {
        eprint!("{}", outcome.notes);
        if !outcome.notes.ends_with('\n') {
            eprintln!();
        }
    }
    Ok(outcome.exit_code)
}
