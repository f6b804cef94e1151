use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Invalid parameters or a hypothesis the caller is responsible for.
    #[error("configuration error: {0}")]
    Config(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The target value is not enclosed by the bracket.
    #[error("target {target} is not bracketed by [{low_value}, {high_value}]")]
    Bracket {
        target: f64,
        low_value: f64,
        high_value: f64,
    },

    /// A value the codomain of a map cannot reach within the search limits.
    #[error("range error: {0}")]
    Range(String),

    /// Non-finite values or runaway iteration.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("inner iteration for stage n={stage} exceeded {limit} steps")]
    InnerConvergence { stage: u64, limit: usize },

    /// A contraction/hypothesis certificate was required but does not hold.
    #[error("certificate failure: {condition} (slack {slack})")]
    Certificate { condition: String, slack: f64 },
}
