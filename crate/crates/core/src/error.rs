use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate triangle {index}: {reason}")]
    DegenerateTriangle { index: usize, reason: String },
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("eigensolver did not converge after {iterations} block steps ({converged}/{requested} pairs, worst residual {worst_residual:.3e})")]
    NoConvergence {
        iterations: usize,
        converged: usize,
        requested: usize,
        worst_residual: f64,
    },
    #[error("ill-conditioned solve: {0}")]
    IllConditioned(String),
    #[error("eigenvalue multiplicity: {0}")]
    Multiplicity(String),
    #[error("kappa locator: {0}")]
    Locator(String),
    #[error("mesh format: line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
