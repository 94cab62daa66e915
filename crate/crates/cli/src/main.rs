use std::process::ExitCode;

use clap::Parser;
use pfperiods_cli::commands::{exit, run};
use pfperiods_cli::config::{Args, RunConfig};

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { 0 });
        }
    };
    let cfg = match RunConfig::from_args(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("pfperiods: {e}");
            return ExitCode::from(exit::USAGE as u8);
        }
    };
    match run(&cfg) {
        Ok(out) => ExitCode::from(out.exit_code as u8),
        Err(e) => {
            eprintln!("pfperiods: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
