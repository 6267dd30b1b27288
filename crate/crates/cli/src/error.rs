use std::io;
use std::path::{Path, PathBuf};

use gnss_grnn::{ForecastError, HarnessError, MetricError, SeriesError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Series { path: PathBuf, source: SeriesError },

    #[error(transparent)]
    Harness(#[from] HarnessError),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error(transparent)]
    Output(#[from] io::Error),
}

impl CliError {
    pub fn io(path: &Path, e: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source: e,
        }
    }

    /// 0 success, 1 usage, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Series { .. } | CliError::Io { .. } | CliError::Output(_) => 2,
            CliError::Harness(h) => match h {
                HarnessError::Forecast(f) => forecast_code(f),
                HarnessError::Params(_) | HarnessError::Series(_) => 2,
                HarnessError::Json(_) | HarnessError::Csv(_) | HarnessError::Io(_) => 2,
            },
        }
    }
}

fn forecast_code(e: &ForecastError) -> u8 {
    match e {
        ForecastError::BandwidthTooSmall { .. } | ForecastError::InvalidBandwidth(_) => 3,
        ForecastError::Metric(MetricError::UndefinedSmapeTerm(_) | MetricError::NonFinite(_)) => 3,
        ForecastError::Config(_) => 1,
        _ => 2,
    }
}

impl From<ForecastError> for CliError {
    fn from(e: ForecastError) -> Self {
        CliError::Harness(HarnessError::Forecast(e))
    }
}

impl From<SeriesError> for CliError {
    fn from(e: SeriesError) -> Self {
        CliError::Harness(HarnessError::Series(e))
    }
}
