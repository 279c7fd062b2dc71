//! `kme`: MMD between measure files, topology diagnostics for kernel
//! sequences, gallery construction, and MDP robustness experiments.
//!
//! Exit codes: 0 success, 2 bad input or usage, 3 numerical failure,
//! 4 violated precondition, 5 solver did not converge.

mod commands;
mod error;
mod io;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "kme", version, about = "Kernel mean embedding diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// MMD norm and total variation distance between two measure files.
    Mmd(commands::MmdArgs),
    /// Strong/weak/w*/Young diagnostics of a kernel sequence against its limit.
    Diag(commands::DiagArgs),
    /// Emit one element of a gallery sequence and its limit as JSON.
    Gallery(commands::GalleryArgs),
    /// Robustness of the optimal cost to transition perturbations.
    Mdp(commands::MdpArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Mmd(a) => commands::mmd(a),
        Command::Diag(a) => commands::diag(a),
        Command::Gallery(a) => commands::gallery(a),
        Command::Mdp(a) => commands::mdp(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
