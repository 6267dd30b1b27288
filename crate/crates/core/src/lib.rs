//! Forecasting of GNSS permanent-station position time series with a
//! generalized regression neural network (Gaussian-kernel Nadaraya-Watson
//! over a rolling window of recent epochs) and a Theta-line baseline, plus
//! the backtesting harness used to compare them.
//!
//! ```
//! use gnss_grnn::{forecast_series, GrnnConfig, Component};
//! use gnss_grnn::harness::{generate_synthetic, SyntheticKind, SyntheticParams};
//!
//! let station = generate_synthetic(SyntheticKind::TrendPlusAnnual, 400, 7, &SyntheticParams::default())?;
//! let out = forecast_series(station.component(Component::X), &GrnnConfig::new(100))?;
//! assert_eq!(out.len(), 300);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod error;
pub mod grnn;
pub mod harness;
pub mod metrics;
pub mod series;
pub mod theta;

pub use error::{ForecastError, HarnessError, MetricError, SeriesError};
pub use grnn::{
    adaptive_predict, advance, compute_weights, forecast_series, forecast_series_from,
    gaussian_kernel, predict_one, AdaptiveOutcome, BandwidthRule, ForecastRecord, GrnnConfig,
    GrnnState, Origin, Prediction, UpdateMode, WeightVector, WindowEntry,
};
pub use metrics::{
    mean_abs_error, smape, smape_with, std_of_errors, MetricsReport, PredictionPairs, SmapeVariant,
};
pub use series::{
    amplitude, compute_anomaly, detect_gaps, parse_series, write_series_csv, Component,
    ComponentSeries, DataState, Epoch, Gap, GapReport, SeriesFormat, StationSeries,
};
pub use theta::{
    estimate_theta, estimate_theta_values, theta_backtest, theta_backtest_from, theta_forecast,
    ThetaFit, ThetaModel, ThetaRecord,
};
