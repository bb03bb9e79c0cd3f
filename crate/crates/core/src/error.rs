use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("tenant {tenant} has {channels} preallocated channels, bid generation allows at most {max}")]
    BidBudgetExceeded {
        tenant: usize,
        channels: usize,
        max: usize,
    },

    #[error("{items} items exceed the supported maximum of {max}")]
    TooManyItems { items: usize, max: usize },

    #[error("invalid bid matrix: {0}")]
    InvalidBids(String),

    /// No feasible winner determination exists; `tenant` is the first bidder
    /// that could not be given an admissible bundle.
    #[error("infeasible auction: tenant {tenant} cannot receive an admissible bundle")]
    Infeasible { tenant: usize },

    #[error("instance too large for exhaustive enumeration: {rows} rows (max {max})")]
    InstanceTooLarge { rows: usize, max: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
