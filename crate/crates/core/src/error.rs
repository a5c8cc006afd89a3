use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument outside the phase domain: {0}")]
    OutOfDomain(String),
    #[error("log-branch guard violated: |{what}| = {value:.3e} < {limit}")]
    BranchGuard {
        what: &'static str,
        value: f64,
        limit: f64,
    },
    #[error("square-root branch is ambiguous: eigenvalue {0} is not in the open right half-plane")]
    BranchAmbiguity(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("degree {degree} exceeds the cap {cap}")]
    DegreeCap { degree: usize, cap: usize },
    #[error("integral does not converge: {0}")]
    Divergent(String),
    #[error("malformed spec: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
