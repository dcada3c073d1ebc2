//! `dynhd` command-line harness.

mod args;
mod commands;
mod config;
mod error;

use clap::Parser;

use args::{Cli, Command};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::SweepWeights(a) => commands::sweep_weights(a),
        Command::Noise(a) => commands::noise(a),
        Command::Roc(a) => commands::roc(a),
        Command::Synth(a) => commands::synth(a),
    };
    if let Err(e) = result {
        eprintln!("dynhd: {e}");
        std::process::exit(e.exit_code());
    }
}
