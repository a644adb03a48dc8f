//! `rydmap` command-line front end.
//!
//! Exit status: 0 on success, 2 when a layout or schedule fails validation,
//! 1 on any other error.

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command, SymmetryCommand};
use commands::{Ctx, ValidationFailed};

fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = Ctx { sign: cli.sign_convention.into() };
    match &cli.command {
        Command::Fit(a) => commands::fit(a, &ctx),
        Command::Metrics(a) => commands::metrics(a),
        Command::Rescale(a) => commands::rescale(a, &ctx),
        Command::Sweep(a) => commands::sweep(a, &ctx),
        Command::Enumerate(a) => commands::enumerate(a, &ctx),
        Command::Umc(a) => commands::umc(a, &ctx),
        Command::Sample(a) => commands::sample(a, &ctx),
        Command::FitTemp(a) => commands::fit_temp(a, &ctx),
        Command::Compare(a) => commands::compare(a),
        Command::Symmetry(SymmetryCommand::Reduce(a)) => commands::symmetry_reduce(a),
        Command::Symmetry(SymmetryCommand::ExpandDataset(a)) => commands::symmetry_expand(a),
        Command::Schedule(a) => commands::schedule(a, &ctx),
        Command::ValidateLayout(a) => commands::validate(a, &ctx),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let validation = err.downcast_ref::<ValidationFailed>().is_some()
        || matches!(err.downcast_ref::<rydmap_core::Error>(), Some(rydmap_core::Error::Validation(_)));
    if validation {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let root = Cli::command();
    let argv = match config::merge(&root, std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let cli = match root.try_get_matches_from(argv).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
