use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use super::{forecast_component, ValueBasis};
use crate::error::HarnessError;
use crate::grnn::{GrnnConfig, UpdateMode};
use crate::metrics::{MetricsReport, PredictionPairs, SmapeVariant};
use crate::series::{Component, StationSeries};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub v: usize,
    pub component: Component,
    pub mode: UpdateMode,
    pub smape_percent: f64,
    pub std_m: f64,
    pub mabs_m: f64,
    /// Number of scored predictions (`p - v`).
    pub n: usize,
}

/// Accuracy against training size, ordered by `v`, then component, then mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub station_id: String,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, v: usize, component: Component, mode: UpdateMode) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.v == v && r.component == component && r.mode == mode)
    }
}

/// For every `v` in `v_range`, every component and every mode, runs a full
/// forecast walk from scratch and scores the predicted values only.
/// `base` supplies everything except `v` and the mode.
pub fn run_sweep(
    series: &StationSeries,
    v_range: RangeInclusive<usize>,
    base: &GrnnConfig,
    modes: &[UpdateMode],
    basis: ValueBasis,
    smape: SmapeVariant,
) -> Result<SweepResult, HarnessError> {
    let (lo, hi) = (*v_range.start(), *v_range.end());
    if lo == 0 || lo > hi {
        return Err(HarnessError::Params(format!(
            "bad training-size range {lo}..={hi}"
        )));
    }
    if hi >= series.len() {
        return Err(HarnessError::Params(format!(
            "largest training size {hi} must be below the series length {}",
            series.len()
        )));
    }
    if modes.is_empty() {
        return Err(HarnessError::Params("no update modes requested".into()));
    }
    if base.threshold.is_some() {
        return Err(HarnessError::Params(
            "the sweep varies the training size itself; drop the threshold".into(),
        ));
    }

    let jobs: Vec<(usize, Component, UpdateMode)> = v_range
        .flat_map(|v| {
            Component::ALL
                .into_iter()
                .flat_map(move |c| modes.iter().map(move |&m| (v, c, m)))
        })
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(v, component, mode)| -> Result<SweepRow, HarnessError> {
            let cfg = GrnnConfig {
                training_size: v,
                max_training_size: base.max_training_size.max(v),
                mode,
                ..base.clone()
            };
            let out = forecast_component(series.component(component), &cfg, v, basis)?;
            let pairs = PredictionPairs::from_pairs(out.iter().map(|r| (r.predicted, r.observed)))?;
            let m = MetricsReport::compute_with(&pairs, smape)?;
            Ok(SweepRow {
                v,
                component,
                mode,
                smape_percent: m.smape_percent,
                std_m: m.std_m,
                mabs_m: m.mabs_m,
                n: m.n,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult {
        station_id: series.station_id().to_string(),
        rows,
    })
}
