use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh: {0}")]
    Mesh(String),

    #[error("quadrature: {0}")]
    Quadrature(String),

    #[error("linear solve: {0}")]
    Solve(String),

    #[error("eigeniteration did not converge after {iterations} iterations (last Ritz estimate {last_estimate:e})")]
    EigenNonConvergence { iterations: usize, last_estimate: f64 },

    #[error("problem setup: {0}")]
    Problem(String),

    #[error("certificate precondition violated: {0}")]
    Certificate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
