mod args;
mod commands;
mod error;
mod grid;
mod table;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, FormatArg};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let args = cli.command.args();
    match commands::run(&cli.command) {
        Ok(outcome) => {
            let text = match args.format {
                FormatArg::Json => {
                    let mut s = serde_json::to_string_pretty(&outcome.json).expect("serializable");
                    s.push('\n');
                    s
                }
                FormatArg::Csv => outcome.table.to_csv(),
            };
            let written = match &args.output {
                Some(path) => std::fs::write(path, text),
                None => std::io::stdout().write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            for warning in &outcome.warnings {
                eprintln!("warning: {warning}");
            }
            ExitCode::from(outcome.status)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
