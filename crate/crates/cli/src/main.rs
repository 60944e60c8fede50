//! `rellich`: constants, discrete estimates, degeneration fits, inequality
//! checks and parameter sweeps from the command line.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage or
//! parameter errors.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use args::{Cli, Command, Settings};
use commands::Outcome;

fn run(cli: &Cli) -> Result<(Outcome, Settings)> {
    let settings = Settings::resolve(&cli.shared)?;
    let outcome = match &cli.command {
        Command::Constants => commands::constants(&settings)?,
        Command::Mu(a) => commands::mu(&settings, a)?,
        Command::EstimateS(a) => commands::estimate_s(&settings, a)?,
        Command::Degenerate {
            family,
            slope_tol,
            sharp_tol,
        } => commands::degenerate(&settings, *family, *slope_tol, *sharp_tol)?,
        Command::Verify { suite, a, samples } => commands::verify(&settings, suite, *a, *samples)?,
        Command::Compare { samples, radius } => commands::compare(&settings, *samples, *radius)?,
        Command::Sweep {
            alpha_min,
            alpha_max,
            alpha_step,
            discrete,
            no_rates,
        } => commands::sweep(
            &settings,
            *alpha_min,
            *alpha_max,
            *alpha_step,
            *discrete,
            !*no_rates,
        )?,
    };
    Ok((outcome, settings))
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
    let result = run(&cli).and_then(|(outcome, settings)| {
        output::emit(&outcome, &settings)?;
        Ok(outcome.report.all_passed())
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error ({}): {e:#}", cli.command.name());
            ExitCode::from(2)
        }
    }
}
