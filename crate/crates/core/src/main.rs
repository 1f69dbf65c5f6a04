use clap::Parser;
use csbp::cli::{run, Cli};
use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse()) as u8)
}
