use std::process::ExitCode;

use clap::Parser;
use rddmk_cli::{execute, CliError, Invocation};

fn main() -> ExitCode {
    let inv = match Invocation::try_parse() {
        Ok(inv) => inv,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Usage(e.to_string().trim().to_string())),
    };
    match execute(&inv) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}
