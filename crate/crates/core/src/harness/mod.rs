//! Backtesting protocol: training-size sweeps, per-station GRNN and Theta
//! scoring, relative comparison with wall-clock timing, and synthetic data.

mod compare;
pub mod output;
mod sweep;
pub mod synthetic;

pub use compare::{
    compare_methods, time_methods, ComparisonReport, ComponentRatios, Ratio, StationRatios,
    TimedPhase, TimingReport,
};
pub use sweep::{run_sweep, SweepResult, SweepRow};
pub use synthetic::{generate_synthetic, SyntheticKind, SyntheticParams};

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ForecastError, HarnessError};
use crate::grnn::{forecast_series_from, ForecastRecord, GrnnConfig};
use crate::metrics::{MetricsReport, PredictionPairs, SmapeVariant};
use crate::series::{
    compute_anomaly, detect_gaps, Component, ComponentSeries, DataState, Epoch, StationSeries,
    DEFAULT_GAP_FACTOR,
};
use crate::theta::{theta_backtest_from, ThetaFit, ThetaRecord};

/// Values the predictors see.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueBasis {
    /// Coordinates as given.
    #[default]
    Raw,
    /// Mean-centred per component; predictions are shifted back before scoring.
    Anomaly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Grnn,
    Theta,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Grnn => "grnn",
            Method::Theta => "theta",
        })
    }
}

/// Everything that determines a station evaluation. Recorded in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSettings {
    pub grnn: GrnnConfig,
    pub theta_window: usize,
    pub theta_fit: ThetaFit,
    pub basis: ValueBasis,
    pub gap_factor: f64,
    pub smape: SmapeVariant,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        let grnn = GrnnConfig::default();
        EvaluationSettings {
            theta_window: grnn.training_size,
            grnn,
            theta_fit: ThetaFit::PerOrigin,
            basis: ValueBasis::Raw,
            gap_factor: DEFAULT_GAP_FACTOR,
            smape: SmapeVariant::PerTerm,
        }
    }
}

impl EvaluationSettings {
    /// Index of the first target both methods can predict.
    pub fn first_target(&self) -> usize {
        self.grnn.training_size.max(self.theta_window)
    }
}

/// Applies the value basis: the series to predict on and the offset to add back.
pub fn apply_basis(series: &ComponentSeries, basis: ValueBasis) -> (ComponentSeries, f64) {
    match basis {
        ValueBasis::Raw => (series.clone(), 0.0),
        ValueBasis::Anomaly => (compute_anomaly(series), series.mean()),
    }
}

/// GRNN forecast of one component in the requested basis, reported in the
/// original coordinates.
pub fn forecast_component(
    series: &ComponentSeries,
    config: &GrnnConfig,
    first_target: usize,
    basis: ValueBasis,
) -> Result<Vec<ForecastRecord>, ForecastError> {
    let (work, offset) = apply_basis(series, basis);
    let mut out = forecast_series_from(&work, config, first_target)?;
    if basis != ValueBasis::Raw {
        for r in &mut out {
            r.predicted += offset;
            r.observed = series.values()[r.index];
        }
    }
    Ok(out)
}

fn theta_component(
    series: &ComponentSeries,
    settings: &EvaluationSettings,
    first_target: usize,
) -> Result<Vec<ThetaRecord>, ForecastError> {
    let (work, offset) = apply_basis(series, settings.basis);
    let mut out = theta_backtest_from(
        &work,
        settings.theta_window,
        first_target,
        settings.theta_fit,
    )?;
    if settings.basis != ValueBasis::Raw {
        for r in &mut out {
            r.predicted += offset;
            r.observed = series.values()[r.index];
        }
    }
    Ok(out)
}

/// Scores of both methods on one component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentResult {
    pub component: Component,
    /// First scored target index; both methods cover `first_index..p`.
    pub first_index: usize,
    pub grnn: MetricsReport,
    pub theta: MetricsReport,
}

impl ComponentResult {
    pub fn metrics(&self, method: Method) -> &MetricsReport {
        match method {
            Method::Grnn => &self.grnn,
            Method::Theta => &self.theta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSpan {
    pub first_mjd: Epoch,
    pub last_mjd: Epoch,
    pub first_year: f64,
    pub last_year: f64,
}

impl TimeSpan {
    fn of(series: &StationSeries) -> Self {
        let (a, b) = series.time_span();
        TimeSpan {
            first_mjd: a,
            last_mjd: b,
            first_year: a.decimal_year(),
            last_year: b.decimal_year(),
        }
    }

    /// Calendar years, as in `1998-2020`.
    pub fn years_label(&self) -> String {
        format!("{}-{}", self.first_year.floor(), self.last_year.floor())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationReport {
    pub station_id: String,
    pub country: Option<String>,
    pub time_span: TimeSpan,
    pub state: DataState,
    pub gap_count: usize,
    pub largest_gap_days: f64,
    pub observations: usize,
    pub components: Vec<ComponentResult>,
}

impl StationReport {
    pub fn component(&self, c: Component) -> Option<&ComponentResult> {
        self.components.iter().find(|r| r.component == c)
    }
}

pub(crate) fn check_same_targets(
    grnn: &[ForecastRecord],
    theta: &[ThetaRecord],
) -> Result<(), ForecastError> {
    let same = grnn.len() == theta.len()
        && grnn
            .iter()
            .zip(theta)
            .all(|(a, b)| a.index == b.index && a.epoch == b.epoch);
    if same {
        Ok(())
    } else {
        Err(ForecastError::UnfairComparison)
    }
}

fn score(
    pairs: impl Iterator<Item = (f64, f64)>,
    variant: SmapeVariant,
) -> Result<MetricsReport, HarnessError> {
    let pairs = PredictionPairs::from_pairs(pairs)?;
    Ok(MetricsReport::compute_with(&pairs, variant)?)
}

fn evaluate_component(
    series: &ComponentSeries,
    settings: &EvaluationSettings,
) -> Result<ComponentResult, HarnessError> {
    let first = settings.first_target();
    let grnn = forecast_component(series, &settings.grnn, first, settings.basis)?;
    let theta = theta_component(series, settings, first)?;
    check_same_targets(&grnn, &theta)?;
    Ok(ComponentResult {
        component: series.component(),
        first_index: first,
        grnn: score(
            grnn.iter().map(|r| (r.predicted, r.observed)),
            settings.smape,
        )?,
        theta: score(
            theta.iter().map(|r| (r.predicted, r.observed)),
            settings.smape,
        )?,
    })
}

/// Runs GRNN and Theta backtests on every component over the same targets
/// and attaches the station's gap state.
pub fn evaluate_station(
    series: &StationSeries,
    settings: &EvaluationSettings,
) -> Result<StationReport, HarnessError> {
    settings.grnn.validate()?;
    let gaps = detect_gaps(series, settings.gap_factor)?;
    let components = series
        .components()
        .par_iter()
        .map(|c| evaluate_component(c, settings))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StationReport {
        station_id: series.station_id().to_string(),
        country: series.country().map(str::to_string),
        time_span: TimeSpan::of(series),
        state: gaps.state,
        gap_count: gaps.gaps.len(),
        largest_gap_days: gaps.largest_gap_days,
        observations: series.len(),
        components,
    })
}

/// [`evaluate_station`] over many stations, in input order.
pub fn evaluate_stations(
    stations: &[StationSeries],
    settings: &EvaluationSettings,
) -> Result<Vec<StationReport>, HarnessError> {
    stations
        .par_iter()
        .map(|s| evaluate_station(s, settings))
        .collect()
}
