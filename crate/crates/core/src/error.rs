use thiserror::Error;

/// Errors raised by the estimators, the mechanism and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("function has {got} values but the grid has {expected} points")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("price range [{lo}, {hi}] contains no grid point")]
    EmptyPriceRange { lo: f64, hi: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("bandwidth must be positive, got {0}")]
    InvalidBandwidth(f64),

    #[error("sample value {value} outside support [{lo}, {hi}]")]
    OutOfSupport { value: f64, lo: f64, hi: f64 },

    #[error("need at least {needed} items, got {got}")]
    TooFew { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("natural-parameter MLE did not converge: gradient norm {grad_norm:e} at theta {theta:?}")]
    MleNotConverged { theta: Vec<f64>, grad_norm: f64 },

    #[error("estimator failed on group {group}: {source}")]
    Group {
        group: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("empty regret record list")]
    NoRecords,

    #[error("virtual valuation undefined: density is zero at {0}")]
    ZeroDensity(f64),

    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },

    #[error("unknown category {0:?}")]
    UnknownCategory(String),

    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),

    #[error("fpca failed at stage boundary: {0}")]
    Fpca(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
