use kappa_core::KappaError;
use thiserror::Error;

/// Exit code for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code for unreadable or malformed input.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for degenerate data or solver non-convergence.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<KappaError> for CliError {
    fn from(e: KappaError) -> Self {
        match e {
            KappaError::DegenerateMargin { .. } | KappaError::Infeasible { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}
