use std::io;

use thiserror::Error;

/// Errors produced by the simulation and measurement pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible step law for alpha={alpha}: mass left for the zero step would be {remainder:.6e} (mu_-1={down:.6}, tail mass={tail:.6})")]
    InfeasibleLaw {
        alpha: f64,
        down: f64,
        tail: f64,
        remainder: f64,
    },

    #[error("rejection sampler gave up after {rounds} rounds (n={n})")]
    RetryBudgetExceeded { rounds: u64, n: usize },

    #[error("malformed multimer configuration: {0}")]
    MalformedConfig(String),

    #[error("malformed walk: {0}")]
    MalformedWalk(String),

    #[error("internal inconsistency while building the causal map: {0}")]
    InternalInconsistency(String),

    #[error("{points} points exceed the gluing budget of {budget}")]
    PointBudgetExceeded { points: usize, budget: usize },

    #[error("sandwich violation: {0}")]
    SandwichViolation(String),

    #[error("exploration truncated after {resolved} resolved letters")]
    TraceTruncated { resolved: usize },

    #[error("witness path does not record a side at x={x}")]
    AmbiguousSide { x: f64 },

    #[error("inequality violation: {0}")]
    InequalityViolation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for the errors that signal a broken exact inequality rather
    /// than bad input.
    pub fn is_violation(&self) -> bool {
        matches!(
            self,
            Error::SandwichViolation(_) | Error::InequalityViolation(_) | Error::InternalInconsistency(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
