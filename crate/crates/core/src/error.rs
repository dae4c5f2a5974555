use thiserror::Error;

use crate::model::EventLog;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimensions must be positive (got {n_users} users, {n_products} products)")]
    ZeroDimensions { n_users: usize, n_products: usize },

    #[error("{what} index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("time regression: state is at {current}, event at {requested}")]
    TimeRegression { current: f64, requested: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid event log: {0}")]
    InvalidLog(String),

    #[error("mark density undefined for user {user}: all tendencies are zero")]
    UndefinedMark { user: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("infeasible likelihood for user {user}: non-positive intensity at an observed event")]
    InfeasibleLikelihood { user: usize },

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("simulation stopped after reaching the cap of {cap} events")]
    CapExceeded { cap: usize, partial: Box<EventLog> },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that come from the numerics rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::InfeasibleLikelihood { .. }
                | Error::FitFailed(_)
                | Error::UndefinedMark { .. }
                | Error::CapExceeded { .. }
                | Error::UndefinedMetric(_)
        )
    }
}
