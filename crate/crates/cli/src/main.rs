mod args;
mod commands;
mod config;
mod io;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;
use serde_json::{Map, Value};

use args::{Cli, Command};

/// Bad invocation: unknown keys, missing flags, unmatched inputs.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const EXIT_DOMAIN: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(path) => config::load(path)?,
        None => Map::<String, Value>::new(),
    };
    let threads = config::threads(cli.threads, &file)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| UsageError(format!("cannot start {threads} threads: {e}")))?;
    match cli.command {
        Command::Analyze(a) => commands::topology::analyze(&config::merge(a, &file)?, &pool),
        Command::Report(a) => commands::topology::report(&config::merge(a, &file)?, &pool),
        Command::Mark(a) => commands::labels::mark(&config::merge(a, &file)?, &pool),
        Command::Color(a) => commands::labels::color(&config::merge(a, &file)?, &pool),
        Command::Decode(a) => commands::fields::decode(&config::merge(a, &file)?, &pool),
        Command::Losscheck(a) => commands::fields::losscheck(&config::merge(a, &file)?, &pool),
        Command::Evaluate(a) => commands::corpus::evaluate(&config::merge(a, &file)?, &pool),
        Command::Synth(a) => commands::corpus::synth(&config::merge(a, &file)?, &pool),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("disco: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_DOMAIN)
            }
        }
    }
}
