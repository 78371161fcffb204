mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, Command, Extra, Resolved};

/// Exit status for invalid input.
const EXIT_USAGE: u8 = 2;
/// Exit status for failures while computing or writing results.
const EXIT_FAILURE: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        Self { code: EXIT_FAILURE, message: message.into() }
    }

    pub fn from_core(e: dgmix::Error) -> Self {
        use dgmix::Error as E;
        match e.root() {
            E::InvalidParameter { .. } | E::DenseLimitExceeded { .. } | E::DimensionMismatch(_) => {
                Self::usage(e.to_string())
            }
            _ => Self::failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::failure(format!("i/o: {e}"))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(a) => {
            let extra = Extra { export_mesh: a.export_mesh, export_matrices: a.export_matrices, ..Extra::default() };
            commands::solve(&Resolved::new("solve", &a.common, extra)?)
        }
        Command::SweepAs(a) => {
            let extra = Extra { as_values: a.as_values, reference: a.reference, ..Extra::default() };
            commands::sweep_as(&Resolved::new("sweep-as", &a.common, extra)?)
        }
        Command::Refine(a) => commands::refine(&Resolved::new("refine", &a.common, Extra::default())?),
        Command::Converge(a) => {
            let extra = Extra { track: a.track, ..Extra::default() };
            commands::converge(&Resolved::new("converge", &a.common, extra)?)
        }
        Command::Limit(a) => {
            let extra = Extra { track: a.track, ..Extra::default() };
            commands::limit(&Resolved::new("limit", &a.common, extra)?)
        }
        Command::Fit(a) => {
            let extra = Extra { input: a.input, ..Extra::default() };
            commands::fit(&Resolved::new("fit", &a.common, extra)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_error_kind() {
        let usage = dgmix::Error::InvalidParameter { name: "N", reason: "zero".into() };
        assert_eq!(CliError::from_core(usage.clone().context("run")).code, EXIT_USAGE);
        assert_eq!(CliError::from_core(dgmix::Error::DenseLimitExceeded { dim: 2, limit: 1 }).code, EXIT_USAGE);
        assert_eq!(CliError::from_core(dgmix::Error::NoConvergence("x".into())).code, EXIT_FAILURE);
        assert_eq!(CliError::from_core(dgmix::Error::Factorization("x".into())).code, EXIT_FAILURE);
    }
}
