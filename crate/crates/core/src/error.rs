//! Shared error type for the laboratory.

use thiserror::Error;

/// Errors surfaced by builders and numerical routines.
///
/// Report-style validation (parameter ranges that merely violate the
/// standing assumptions) does *not* use this type; it returns a list of
/// findings instead.  `CoreError` is reserved for conditions under which
/// an operation cannot produce a meaningful result at all.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Matrix or vector dimensions do not match the operation.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A representation or grid would exceed the configured resource budget.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    /// Parameters outside the domain where the operation is defined.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An iterative routine failed to certify its result.
    #[error("numerical certification failure: {0}")]
    CertificationFailure(String),
}
