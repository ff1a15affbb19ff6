use std::process::ExitCode;

use clap::Parser;
use stwave_cli::{run, RunConfig};

fn main() -> ExitCode {
    let config = RunConfig::parse();
    match run(&config) {
        Ok((_, slope)) => {
            match slope {
                Some(s) => println!("slope {s}"),
                None => println!("slope n/a"),
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
