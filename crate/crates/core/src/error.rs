use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A value exceeds a representable or configured bound.
    #[error("range error: {what} exceeds limit {limit}")]
    Range { what: String, limit: String },

    /// A bounded scan ran out of budget before finding its target.
    #[error("resource error: {0}")]
    Resource(String),

    /// The value is not an element of the requested matrix row.
    #[error("membership error: {value} is not an element of row {row}")]
    NotInRow { value: u128, row: u64 },

    /// No prime exists where one was searched for.
    #[error("no prime in ({lo}, {hi})")]
    NoPrime { lo: u128, hi: u128 },

    /// The interval (m², (m+1)²) holds no prime.
    #[error("Legendre counterexample at m = {m}: no prime in ({lo}, {hi})")]
    LegendreCounterexample { m: u64, lo: u128, hi: u128 },

    /// Two routes that must agree did not. Always a bug or a broken precondition.
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),
}

impl Error {
    pub(crate) fn range(what: impl Into<String>, limit: impl ToString) -> Self {
        Error::Range {
            what: what.into(),
            limit: limit.to_string(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn inconsistency(msg: impl Into<String>) -> Self {
        Error::Inconsistency(msg.into())
    }

    /// Attach the `m` being processed to the message, keeping the variant.
    pub fn at_m(self, m: u64) -> Self {
        match self {
            Error::Domain(s) => Error::Domain(format!("m = {m}: {s}")),
            Error::Resource(s) => Error::Resource(format!("m = {m}: {s}")),
            Error::Inconsistency(s) => Error::Inconsistency(format!("m = {m}: {s}")),
            Error::Range { what, limit } => Error::Range {
                what: format!("m = {m}: {what}"),
                limit,
            },
            other => other,
        }
    }
}
