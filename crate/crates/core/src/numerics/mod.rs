//! Shared numerical kernels: QR least squares, Gaussian log-likelihood and
//! the tail probabilities behind every reported p-value.

mod distribution;
mod lstsq;
pub mod special;

pub use distribution::{tail_probability, Distribution, Sides};
pub use lstsq::{gaussian_loglik, min_eigenvalue, solve_least_squares, symmetric_pseudo_inverse, LeastSquaresSolution};
pub(crate) use lstsq::symmetrize;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("design matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },
    #[error("least squares needs at least as many rows as columns (rows {rows}, columns {cols})")]
    Underdetermined { rows: usize, cols: usize },
    #[error("response length {len} does not match design rows {rows}")]
    DimensionMismatch { rows: usize, len: usize },
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("invalid degrees of freedom for {0}")]
    InvalidDegreesOfFreedom(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}
