use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use mflq_cli::args::{Cli, Command};
use mflq_cli::{cmd_alm, cmd_example, cmd_simulate, cmd_solve, cmd_verify, CliError, Outcome};

fn write_report(path: &Path, outcome: &Outcome) -> Result<(), CliError> {
    std::fs::write(path, outcome.report_json())
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { mflq_cli::EXIT_PARSE as u8 } else { 0 });
        }
    };
    let (result, out) = match &cli.command {
        Command::Solve(a) => (cmd_solve(a), a.out.as_deref()),
        Command::Simulate(a) => (cmd_simulate(a), a.out.as_deref()),
        Command::Alm(a) => (cmd_alm(a), a.out.as_deref()),
        Command::Verify(a) => (cmd_verify(a), a.out.as_deref()),
        Command::Example(a) => (cmd_example(a), a.out.as_deref()),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(outcome.text.as_bytes());
    if let Some(path) = out {
        if let Err(e) = write_report(path, &outcome) {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    }
    ExitCode::from(outcome.code as u8)
}
