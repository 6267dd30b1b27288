//! Report serialisation.
//!
//! JSON carries every number at full round-trip precision and a schema
//! version. CSV summaries use six decimals for lengths in meters and
//! six-digit scientific notation for sMAPE, whose values on raw ECEF
//! coordinates sit many orders of magnitude below one percent.

use std::io::Write;

use serde::Serialize;

use super::{
    ComparisonReport, EvaluationSettings, Method, StationReport, SweepResult, TimingReport,
};
use crate::error::HarnessError;
use crate::grnn::{ForecastRecord, UpdateMode};
use crate::series::Component;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Top-level JSON document written by `compare`.
#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument<'a> {
    pub schema_version: u32,
    pub settings: &'a EvaluationSettings,
    pub stations: &'a [StationReport],
    pub comparison: &'a ComparisonReport,
}

impl<'a> ReportDocument<'a> {
    pub fn new(
        settings: &'a EvaluationSettings,
        stations: &'a [StationReport],
        comparison: &'a ComparisonReport,
    ) -> Self {
        ReportDocument {
            schema_version: REPORT_SCHEMA_VERSION,
            settings,
            stations,
            comparison,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingDocument<'a> {
    pub schema_version: u32,
    pub timing: &'a TimingReport,
    pub time_ratio: super::Ratio,
}

pub fn write_json<W: Write, T: Serialize>(value: &T, mut out: W) -> Result<(), HarnessError> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn meters(x: f64) -> String {
    format!("{x:.6}")
}

fn percent(x: f64) -> String {
    format!("{x:.6e}")
}

/// One row per station, method and component, in the column order of the
/// per-station accuracy tables.
pub fn write_station_csv<W: Write>(reports: &[StationReport], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "station",
        "country",
        "time_span",
        "state",
        "method",
        "component",
        "smape_percent",
        "std_m",
        "mabs_m",
        "n",
    ])?;
    for r in reports {
        for method in [Method::Grnn, Method::Theta] {
            for c in &r.components {
                let m = c.metrics(method);
                w.write_record([
                    r.station_id.clone(),
                    r.country.clone().unwrap_or_default(),
                    r.time_span.years_label(),
                    r.state.to_string(),
                    method.to_string(),
                    c.component.to_string(),
                    percent(m.smape_percent),
                    meters(m.std_m),
                    meters(m.mabs_m),
                    m.n.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn mode_label(m: UpdateMode) -> &'static str {
    match m {
        UpdateMode::Recursive => "recursive",
        UpdateMode::TeacherForced => "teacher_forced",
    }
}

/// `v,component,mode,smape,std,mabs`, one row per sweep row.
pub fn write_sweep_csv<W: Write>(sweep: &SweepResult, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["v", "component", "mode", "smape", "std", "mabs"])?;
    for r in &sweep.rows {
        w.write_record([
            r.v.to_string(),
            r.component.to_string(),
            mode_label(r.mode).to_string(),
            percent(r.smape_percent),
            meters(r.std_m),
            meters(r.mabs_m),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One station component's forecast walk.
#[derive(Debug, Clone, Serialize)]
pub struct ForecastTable {
    pub station: String,
    pub component: Component,
    pub records: Vec<ForecastRecord>,
}

/// Forecast table rows at full precision.
pub fn write_forecast_csv<W: Write>(tables: &[ForecastTable], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "station",
        "epoch_mjd",
        "component",
        "predicted_m",
        "observed_m",
        "abs_error_m",
        "training_size",
        "threshold_met",
    ])?;
    for t in tables {
        for r in &t.records {
            w.write_record([
                t.station.clone(),
                r.epoch.mjd().to_string(),
                t.component.to_string(),
                r.predicted.to_string(),
                r.observed.to_string(),
                r.error().abs().to_string(),
                r.training_size.to_string(),
                r.threshold_met.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
