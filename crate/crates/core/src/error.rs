use thiserror::Error;

/// Errors produced by the construction, evaluation and analysis routines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A construction or operation parameter is invalid.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A rectangle or row address is malformed or out of range.
    #[error("invalid address: {0}")]
    Address(String),

    /// The requested generation cannot be realized: a row gap is not positive.
    #[error("construction degenerate at generation {generation}: {detail}")]
    Degenerate { generation: usize, detail: String },

    /// The operation is not defined for scheduled (varying) constructions.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The planner exhausted its search limits.
    #[error("no plan found: {0}")]
    NoPlan(String),

    /// A certificate inequality failed to hold with positive margin.
    #[error("certification failed: {0}")]
    Certification(String),

    /// Malformed textual input (rationals, addresses, serialized documents).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
