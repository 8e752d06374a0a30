//! `corola` command-line driver: `run` processes a frame sequence, `synth`
//! writes synthetic sequences or runs parameter sweeps, `eval` scores masks.
//!
//! Exit codes: 0 success, 1 processing failure, 2 unreadable input,
//! 3 frame size mismatch, 4 bad configuration or arguments.
//! Logging is controlled by `COROLA_LOG` (error, warn, info, debug).

mod config;
mod eval;
mod failure;
mod input;
mod run;
mod synth;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use failure::EXIT_CONFIG;

#[derive(Debug, Parser)]
#[command(name = "corola", version, about = "Online low-rank background modelling and foreground detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Model a frame sequence and write masks, backgrounds and a trace.
    Run(run::RunArgs),
    /// Write a synthetic sequence, or run a parameter sweep on one.
    Synth(synth::SynthArgs),
    /// Score predicted masks against ground truth.
    Eval(eval::EvalArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COROLA_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run::run(args),
        Command::Synth(args) => synth::synth(args),
        Command::Eval(args) => eval::eval(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
