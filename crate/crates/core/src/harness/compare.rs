use std::hint::black_box;
use std::time::Instant;

use serde::Serialize;

use super::{apply_basis, check_same_targets, EvaluationSettings, Method, StationReport};
use crate::error::HarnessError;
use crate::grnn::forecast_series_from;
use crate::series::{Component, ComponentSeries, StationSeries};
use crate::theta::theta_backtest_from;

/// `grnn / theta`, left undefined when the Theta value is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ratio {
    pub value: Option<f64>,
    pub grnn: f64,
    pub theta: f64,
}

impl Ratio {
    pub fn new(grnn: f64, theta: f64) -> Self {
        let value = (theta != 0.0).then(|| grnn / theta);
        Ratio { value, grnn, theta }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentRatios {
    pub component: Component,
    pub smape: Ratio,
    pub std: Ratio,
    pub mabs: Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationRatios {
    pub station_id: String,
    pub components: Vec<ComponentRatios>,
}

/// GRNN criteria divided by Theta criteria. Aggregate ratios divide the
/// station means of each criterion; per-station ratios are kept alongside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub stations: usize,
    pub components: Vec<ComponentRatios>,
    pub per_station: Vec<StationRatios>,
    /// Median GRNN wall time over median Theta wall time.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_ratio: Option<Ratio>,
}

fn ratios_for(
    reports: &[&StationReport],
    component: Component,
) -> Result<ComponentRatios, HarnessError> {
    let mut sums = [[0.0f64; 3]; 2];
    for r in reports {
        let c = r.component(component).ok_or_else(|| {
            HarnessError::Params(format!(
                "station {} lacks component {component}",
                r.station_id
            ))
        })?;
        for (slot, method) in [Method::Grnn, Method::Theta].into_iter().enumerate() {
            let m = c.metrics(method);
            sums[slot][0] += m.smape_percent;
            sums[slot][1] += m.std_m;
            sums[slot][2] += m.mabs_m;
        }
    }
    let n = reports.len() as f64;
    let mean = |slot: usize, k: usize| sums[slot][k] / n;
    Ok(ComponentRatios {
        component,
        smape: Ratio::new(mean(0, 0), mean(1, 0)),
        std: Ratio::new(mean(0, 1), mean(1, 1)),
        mabs: Ratio::new(mean(0, 2), mean(1, 2)),
    })
}

pub fn compare_methods(
    reports: &[StationReport],
    timing: Option<&TimingReport>,
) -> Result<ComparisonReport, HarnessError> {
    if reports.is_empty() {
        return Err(HarnessError::Params("no station reports to compare".into()));
    }
    let all: Vec<&StationReport> = reports.iter().collect();
    let components = Component::ALL
        .into_iter()
        .map(|c| ratios_for(&all, c))
        .collect::<Result<Vec<_>, _>>()?;
    let per_station = reports
        .iter()
        .map(|r| {
            Ok(StationRatios {
                station_id: r.station_id.clone(),
                components: Component::ALL
                    .into_iter()
                    .map(|c| ratios_for(&[r], c))
                    .collect::<Result<Vec<_>, HarnessError>>()?,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(ComparisonReport {
        stations: reports.len(),
        components,
        per_station,
        time_ratio: timing.map(|t| Ratio::new(t.grnn_median_s, t.theta_median_s)),
    })
}

/// A section of work covered by a stopwatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimedPhase {
    GrnnBacktest,
    ThetaBacktest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub repetitions: usize,
    /// Predictions per method per repetition.
    pub predictions: usize,
    pub grnn_s: Vec<f64>,
    pub theta_s: Vec<f64>,
    pub grnn_median_s: f64,
    pub theta_median_s: f64,
    /// Phases inside the stopwatches, in the order run.
    pub timed_phases: Vec<TimedPhase>,
}

impl TimingReport {
    pub fn time_ratio(&self) -> Ratio {
        Ratio::new(self.grnn_median_s, self.theta_median_s)
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Wall-clock timing of both backtests on identical workloads, run serially
/// on the calling thread. Inputs arrive parsed and basis-adjusted before any
/// stopwatch starts, and nothing is serialised inside one.
pub fn time_methods(
    stations: &[StationSeries],
    settings: &EvaluationSettings,
    repetitions: usize,
) -> Result<TimingReport, HarnessError> {
    if repetitions < 3 {
        return Err(HarnessError::Params(format!(
            "timing needs at least 3 repetitions, got {repetitions}"
        )));
    }
    if stations.is_empty() {
        return Err(HarnessError::Params("no stations to time".into()));
    }
    settings.grnn.validate()?;
    let first = settings.first_target();
    let work: Vec<ComponentSeries> = stations
        .iter()
        .flat_map(|s| s.components().iter())
        .map(|c| apply_basis(c, settings.basis).0)
        .collect();

    // one untimed pass to check fairness and count the workload
    let mut predictions = 0;
    for c in &work {
        let g = forecast_series_from(c, &settings.grnn, first)?;
        let t = theta_backtest_from(c, settings.theta_window, first, settings.theta_fit)?;
        check_same_targets(&g, &t)?;
        predictions += g.len();
    }

    let mut grnn_s = Vec::with_capacity(repetitions);
    let mut theta_s = Vec::with_capacity(repetitions);
    let mut timed_phases = Vec::with_capacity(2 * repetitions);
    for _ in 0..repetitions {
        let start = Instant::now();
        for c in &work {
            black_box(forecast_series_from(black_box(c), &settings.grnn, first)?);
        }
        grnn_s.push(start.elapsed().as_secs_f64());
        timed_phases.push(TimedPhase::GrnnBacktest);

        let start = Instant::now();
        for c in &work {
            black_box(theta_backtest_from(
                black_box(c),
                settings.theta_window,
                first,
                settings.theta_fit,
            )?);
        }
        theta_s.push(start.elapsed().as_secs_f64());
        timed_phases.push(TimedPhase::ThetaBacktest);
    }
    Ok(TimingReport {
        repetitions,
        predictions,
        grnn_median_s: median(&grnn_s),
        theta_median_s: median(&theta_s),
        grnn_s,
        theta_s,
        timed_phases,
    })
}
