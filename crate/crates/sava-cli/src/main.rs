//! Command-line front door: datasets → valuation → evaluation, with config
//! files, artifact dumps, and benchmark orchestration.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 resource guard
//! (memory budget, oracle cap), 4 numerical failure.

mod cli;
mod commands;
mod settings;
mod util;

use clap::Parser;

use cli::{Cli, Command};

fn main() {
    let args = Cli::parse();
    let result = match args.command {
        Command::Synth(a) => commands::synth::run(&a),
        Command::Corrupt(a) => commands::corrupt::run(&a),
        Command::Value(a) => commands::value::run(&a),
        Command::Eval(a) => commands::eval::run(&a),
        Command::Bench(a) => commands::bench::run(&a),
        Command::Inspect(a) => commands::inspect::run(&a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(util::exit_code(&e));
    }
}
