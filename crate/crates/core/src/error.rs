use thiserror::Error;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in row {row}")]
    NonFinite { row: usize },

    #[error("row {row} lies at the origin; angle undefined")]
    AtOrigin { row: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("too few observations: need at least {needed}, got {got}")]
    TooFew { needed: usize, got: usize },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("optimizer failed to converge: {0}")]
    NonConvergence(String),

    #[error("local fit failed at angle index {index}: {source}")]
    AngleFit {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("boundary invariant violated: {0}")]
    Invariant(String),

    #[error("not estimable: {0}")]
    NotEstimable(String),

    #[error("csv error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by the data rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::NonFinite { .. }
                | Error::AtOrigin { .. }
                | Error::Invariant(_)
                | Error::Parse { .. }
                | Error::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
