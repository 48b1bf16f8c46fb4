use std::process::ExitCode;

use clap::Parser;
use hetnoi::cli::{error_json, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            let files: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
            println!("{}", serde_json::json!({ "command": cli.command.name(), "outputs": files }));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}
