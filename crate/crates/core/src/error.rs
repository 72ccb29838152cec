use thiserror::Error;

/// Errors raised by the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// Model primitives violate a maintained inequality.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A bracketed equation has no root in its bracket.
    #[error("no solution: {0}")]
    NoSolution(String),
    /// The quantity diverges at the requested point.
    #[error("singular: {0}")]
    Singular(String),
    /// No mechanism of the requested form yields positive revenue.
    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;
