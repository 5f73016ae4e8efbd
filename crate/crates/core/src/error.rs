use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("negative density {value:e} at cell {cell}")]
    NegativeDensity { cell: usize, value: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("mass drift {relative:e} exceeds tolerance {tolerance:e}")]
    MassDrift { relative: f64, tolerance: f64 },

    #[error("coordinate {x} lies outside the interior [{lo}, {hi}]")]
    OutsideInterior { x: f64, lo: f64, hi: f64 },

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// An error raised part-way through a computation, carrying whatever was
/// produced before the failure.
#[derive(Debug, Error)]
#[error("{error}")]
pub struct Aborted<T: std::fmt::Debug> {
    #[source]
    pub error: Error,
    pub partial: T,
}
