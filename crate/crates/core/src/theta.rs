//! Theta-line forecaster used as the statistical baseline.
//!
//! With ordinal indices `t = 1..p` over the training values,
//!
//! ```text
//! theta = 12 / (p (p^2 - 1)) * sum(t * y_t) - 6 / (p (p - 1)) * sum(y_t)
//! y_k   = y_1 + (k - 1)(y_2 - y_1) + theta * sum_{t=2}^{k-1} (k - t)(y_{t+1} - 2 y_t + y_{t-1})
//! ```
//!
//! Second differences that would need values past `y_p` are dropped, so the
//! inner sum stops at `t = min(k - 1, p - 1)`.

use serde::{Deserialize, Serialize};

use crate::error::ForecastError;
use crate::series::{ComponentSeries, Epoch};

/// Smallest window the forecaster accepts.
pub const MIN_WINDOW: usize = 3;

/// Slope estimate over ordinal indices. Needs at least two values.
///
/// Evaluated as `12 / (p (p^2 - 1)) * sum((t - (p + 1) / 2) * (y_t - y_1))`,
/// which is the same quantity with the large cancelling terms removed.
pub fn estimate_theta_values(values: &[f64]) -> Result<f64, ForecastError> {
    let p = values.len();
    if p < 2 {
        return Err(ForecastError::InsufficientData { count: p, min: 2 });
    }
    let pf = p as f64;
    let centre = 0.5 * (pf + 1.0);
    let base = values[0];
    let s: f64 = values
        .iter()
        .enumerate()
        .map(|(i, &y)| ((i + 1) as f64 - centre) * (y - base))
        .sum();
    Ok(12.0 / (pf * (pf * pf - 1.0)) * s)
}

pub fn estimate_theta(training: &ComponentSeries) -> Result<f64, ForecastError> {
    estimate_theta_values(training.values())
}

/// Theta, the two anchor values and the training window it was fit on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaModel {
    pub theta: f64,
    pub y1: f64,
    pub y2: f64,
    training: Vec<f64>,
}

impl ThetaModel {
    pub fn fit(values: &[f64]) -> Result<Self, ForecastError> {
        let theta = estimate_theta_values(values)?;
        ThetaModel::with_theta(values, theta)
    }

    /// A model over `values` with an externally chosen theta.
    pub fn with_theta(values: &[f64], theta: f64) -> Result<Self, ForecastError> {
        if values.len() < MIN_WINDOW {
            return Err(ForecastError::InsufficientData {
                count: values.len(),
                min: MIN_WINDOW,
            });
        }
        Ok(ThetaModel {
            theta,
            y1: values[0],
            y2: values[1],
            training: values.to_vec(),
        })
    }

    pub fn training(&self) -> &[f64] {
        &self.training
    }

    pub fn forecast(&self, k: usize) -> Result<f64, ForecastError> {
        theta_forecast_values(&self.training, self.theta, k)
    }
}

pub fn theta_forecast(model: &ThetaModel, k: usize) -> Result<f64, ForecastError> {
    model.forecast(k)
}

fn theta_forecast_values(y: &[f64], theta: f64, k: usize) -> Result<f64, ForecastError> {
    if k < 3 {
        return Err(ForecastError::HorizonOutOfRange(k));
    }
    let p = y.len();
    if p < MIN_WINDOW {
        return Err(ForecastError::InsufficientData {
            count: p,
            min: MIN_WINDOW,
        });
    }
    let last_t = (k - 1).min(p - 1);
    // 1-based t maps to y[t - 1]
    let curvature: f64 = (2..=last_t)
        .map(|t| (k - t) as f64 * (y[t] - 2.0 * y[t - 1] + y[t - 2]))
        .sum();
    Ok(y[0] + (k - 1) as f64 * (y[1] - y[0]) + theta * curvature)
}

/// Where theta comes from in a backtest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaFit {
    /// Refit on each rolling window.
    #[default]
    PerOrigin,
    /// Fit once on the whole series.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaRecord {
    pub index: usize,
    pub epoch: Epoch,
    pub predicted: f64,
    pub observed: f64,
    pub theta: f64,
}

impl ThetaRecord {
    pub fn error(&self) -> f64 {
        self.observed - self.predicted
    }
}

/// One-step-ahead rolling-origin backtest: every target from index `window`
/// on is forecast from the `window` observations before it.
pub fn theta_backtest(
    series: &ComponentSeries,
    window: usize,
) -> Result<Vec<ThetaRecord>, ForecastError> {
    theta_backtest_from(series, window, window, ThetaFit::PerOrigin)
}

/// As [`theta_backtest`], starting at `first_target` (`>= window`).
/// Missing epochs are never targets; the window is simply the preceding
/// observed values.
pub fn theta_backtest_from(
    series: &ComponentSeries,
    window: usize,
    first_target: usize,
    fit: ThetaFit,
) -> Result<Vec<ThetaRecord>, ForecastError> {
    let n = series.len();
    if window < MIN_WINDOW {
        return Err(ForecastError::InsufficientData {
            count: window,
            min: MIN_WINDOW,
        });
    }
    if n <= window || first_target >= n {
        return Err(ForecastError::NothingToPredict { count: n, window });
    }
    if first_target < window {
        return Err(ForecastError::InsufficientHistory {
            index: first_target,
            needed: window,
        });
    }
    let values = series.values();
    let global = match fit {
        ThetaFit::Global => Some(estimate_theta_values(values)?),
        ThetaFit::PerOrigin => None,
    };
    (first_target..n)
        .map(|k| {
            let train = &values[k - window..k];
            let theta = match global {
                Some(t) => t,
                None => estimate_theta_values(train)?,
            };
            Ok(ThetaRecord {
                index: k,
                epoch: series.epochs()[k],
                predicted: theta_forecast_values(train, theta, window + 1)?,
                observed: values[k],
                theta,
            })
        })
        .collect()
}
