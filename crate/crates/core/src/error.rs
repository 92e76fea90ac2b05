use thiserror::Error;

/// Failure modes shared by all solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("potential failed validation: {0}")]
    Validation(String),

    #[error("{what} did not converge (residual {residual:.3e} after {iterations} iterations)")]
    NonConvergence {
        what: &'static str,
        residual: f64,
        iterations: usize,
    },

    #[error("regularity lost at order {order}: origin defect {defect:.3e} exceeds {tolerance:.1e}")]
    Regularity {
        order: usize,
        defect: f64,
        tolerance: f64,
    },

    #[error("horizon too short: field/trajectory size {size:.3e} at the far end exceeds {tolerance:.1e}")]
    HorizonTooShort { size: f64, tolerance: f64 },

    #[error("domain too small: eigenvector boundary mass {mass:.3e} exceeds {tolerance:.1e}")]
    DomainTooSmall { mass: f64, tolerance: f64 },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that signal a solver failing to converge, as opposed to bad input.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::Regularity { .. }
                | Error::HorizonTooShort { .. }
                | Error::DomainTooSmall { .. }
                | Error::Singular(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
