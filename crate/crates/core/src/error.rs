use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("singular model: density operator eigenvalue {min_eigenvalue:e} is below the positivity floor {floor:e}")]
    SingularModel { min_eigenvalue: f64, floor: f64 },

    #[error("{what} is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { what: String, min_eigenvalue: f64 },

    #[error("{what} is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { what: String, min_eigenvalue: f64 },

    #[error("eigendecomposition of {what} did not converge")]
    NoConvergence { what: String },

    #[error("measurement is not locally unbiased (jacobian residual {jacobian_residual:e}, mean residual {mean_residual:e})")]
    NotLocallyUnbiased {
        jacobian_residual: f64,
        mean_residual: f64,
    },

    #[error(
        "model does not satisfy the randomness condition (score {score:e}{})",
        witness.map(|(i, j)| format!(", zero-based offending pair ({i}, {j})")).unwrap_or_default()
    )]
    NotRandomModel {
        score: f64,
        witness: Option<(usize, usize)>,
    },

    #[error("linear program failed: {0}")]
    LinearProgram(String),
}
