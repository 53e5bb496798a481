use std::process::ExitCode;

use clap::Parser;
use wpress_cli::record::EXIT_CONFIG;
use wpress_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let out = cli.command.inputs().out.clone();
    let record = run(cli.command);
    let text = serde_json::to_string_pretty(&record).expect("records serialize") + "\n";
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &text) {
                eprintln!("wpress: cannot write {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        }
        None => print!("{text}"),
    }
    if let Some(err) = &record.error {
        eprintln!("wpress: {}", err.message);
    }
    ExitCode::from(record.exit_code as u8)
}
