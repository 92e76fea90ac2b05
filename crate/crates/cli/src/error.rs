use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Solver(#[from] semiclassical_core::Error),

    #[error("i/o: {0}")]
    Io(String),

    #[error("regression failed: {0}")]
    Regression(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    /// 2 for bad input or a failed potential check, 3 for a solver that did
    /// not converge, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Validation(_) => 2,
            CliError::Solver(e) if e.is_convergence_failure() => 3,
            CliError::Solver(_) => 2,
            CliError::Io(_) | CliError::Regression(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
