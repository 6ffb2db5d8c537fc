use thiserror::Error;

/// Errors shared by every module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// The interval [n^{3/2}/2, n^{3/2}) contains no prime.
    #[error("dimension too small: no prime in [{lo}, {hi})")]
    DimensionTooSmall { lo: f64, hi: f64 },

    /// A generator matrix was requested with more rows than columns.
    #[error("invalid shape: k={k} rows exceed n={n} columns")]
    InvalidShape { k: usize, n: usize },

    /// A message vector does not match the generator row count.
    #[error("length mismatch: message has {got} symbols, code expects {expected}")]
    LengthMismatch { got: usize, expected: usize },

    /// Subcode row count outside 1..=k.
    #[error("invalid k1={k1}: must satisfy 1 <= k1 <= {k}")]
    InvalidK1 { k1: usize, k: usize },

    /// Chain row counts must be strictly ascending and within 1..=n.
    #[error("invalid row counts: {reason}")]
    InvalidRowCounts { reason: String },

    /// An enumeration would visit more points than the caller allowed.
    #[error("budget exceeded: operation needs {needed} points, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    /// Volume and rate formulas are undefined for rank-deficient generators.
    #[error("rank-deficient generator: rank {rank} < k {k}")]
    RankDeficient { rank: usize, k: usize },

    /// A configuration value violated a precondition.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Unknown goodness check name.
    #[error("unknown check: {0}")]
    UnknownCheck(String),
}

pub type Result<T> = std::result::Result<T, Error>;
