use thiserror::Error;

/// Errors raised while ingesting or validating station series.
#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },

    #[error("line {line}: duplicate epoch {mjd}")]
    DuplicateEpoch { line: u64, mjd: f64 },

    #[error("series too short: {count} rows (need at least {min})")]
    TooShort { count: usize, min: usize },

    #[error("unrecognised header: expected `epoch_mjd,x_m,y_m,z_m` or `epoch_year,x_m,y_m,z_m`, found `{0}`")]
    Header(String),

    #[error("invalid epoch {0}: MJD must be positive and finite")]
    InvalidEpoch(f64),

    #[error("epochs are not strictly increasing at index {0}")]
    NotIncreasing(usize),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("components do not share one epoch axis")]
    EpochMismatch,

    #[error("nominal interval must be positive, got {0}")]
    Interval(f64),

    #[error("empty series")]
    Empty,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors raised by the forecasting and evaluation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForecastError {
    #[error("bandwidth too small: every kernel value underflowed to zero (h = {h})")]
    BandwidthTooSmall { h: f64 },

    #[error("invalid bandwidth {0}: must be positive and finite")]
    InvalidBandwidth(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient history: index {index} needs at least {needed} prior values")]
    InsufficientHistory { index: usize, needed: usize },

    #[error("nothing to predict: series has {count} values, training size is {window}")]
    NothingToPredict { count: usize, window: usize },

    #[error("target epoch {target} is not after the last window epoch {last}")]
    TargetNotAfterWindow { target: f64, last: f64 },

    #[error("empty training window")]
    EmptyWindow,

    #[error("teacher-forced update at epoch {0} has no observed value")]
    MissingObservation(f64),

    #[error("insufficient data: {count} values, need at least {min}")]
    InsufficientData { count: usize, min: usize },

    #[error("k = {0} out of range for the theta forecast (need k >= 3)")]
    HorizonOutOfRange(usize),

    #[error("metric error: {0}")]
    Metric(#[from] MetricError),

    #[error("methods were scored on different prediction sets")]
    UnfairComparison,
}

/// Errors raised by the accuracy criteria.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("no prediction pairs")]
    Empty,

    #[error("prediction and truth lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("non-finite value in pair {0}")]
    NonFinite(usize),

    #[error("undefined sMAPE term at index {0}: |y| + |y_hat| = 0")]
    UndefinedSmapeTerm(usize),

    #[error("StD undefined for {0} pair(s); need at least 2")]
    StdUndefined(usize),
}

/// Errors surfaced by the experiment harness.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Series(#[from] SeriesError),

    #[error(transparent)]
    Forecast(#[from] ForecastError),

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<MetricError> for HarnessError {
    fn from(e: MetricError) -> Self {
        HarnessError::Forecast(ForecastError::Metric(e))
    }
}
