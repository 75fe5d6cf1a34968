//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("group mismatch: {0}")]
    GroupMismatch(String),
    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("homomorphism is not surjective")]
    NonSurjective,
    #[error("computation exceeds size guard: {0}")]
    TooLarge(String),
    #[error("grid values are not polynomial relative to the filtration (offending index {index:?}: {detail})")]
    NotPolynomial { index: Vec<usize>, detail: String },
    #[error("filtration violation at position ({0}, {1})")]
    FiltrationViolation(usize, usize),
    #[error("exponent sequence violates the divisibility precondition: {0}")]
    BadExponents(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("discrepancy map is not an abelian polynomial of the expected degree: {0}")]
    DiscrepancyNotAbelian(String),
    #[error("polynomial map does not have the required coordinate periods: {0}")]
    PeriodMismatch(String),
    #[error("test function fails its lattice-invariance check (max deviation {0:e})")]
    NotInvariant(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
