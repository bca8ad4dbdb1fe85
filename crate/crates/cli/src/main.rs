use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use chanfactor_cli::{run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = match run(&cli) {
        Ok(output) => output,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(err.exit_code());
        }
    };
    if let Err(err) = emit(&cli, &output.text) {
        eprintln!("error: {err:#}");
        return ExitCode::from(3);
    }
    if output.passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("validation failed");
        ExitCode::from(2)
    }
}

fn emit(cli: &Cli, text: &str) -> anyhow::Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .context("cannot write to stdout"),
    }
}
