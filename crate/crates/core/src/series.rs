//! Station position time series: ingestion, validation, gap detection and
//! descriptive statistics.
//!
//! Epochs are held as Modified Julian Dates. Files may instead carry a
//! decimal-year column, which is converted on ingest with a 365.25-day year
//! anchored at MJD 51544.5 (2000.0).

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::SeriesError;

/// MJD of the decimal-year origin 2000.0.
pub const MJD_AT_2000: f64 = 51544.5;
/// Length of the decimal year used for conversion, in days.
pub const DAYS_PER_YEAR: f64 = 365.25;
/// Default multiple of the nominal interval above which a spacing counts as a gap.
pub const DEFAULT_GAP_FACTOR: f64 = 1.5;
/// Minimum number of rows accepted by [`parse_series`].
pub const MIN_ROWS: usize = 3;

/// A Modified Julian Date in days. Always positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Epoch(f64);

impl Epoch {
    pub fn new(mjd: f64) -> Result<Self, SeriesError> {
        if mjd.is_finite() && mjd > 0.0 {
            Ok(Epoch(mjd))
        } else {
            Err(SeriesError::InvalidEpoch(mjd))
        }
    }

    pub fn from_decimal_year(year: f64) -> Result<Self, SeriesError> {
        Epoch::new(MJD_AT_2000 + (year - 2000.0) * DAYS_PER_YEAR)
    }

    #[inline]
    pub fn mjd(self) -> f64 {
        self.0
    }

    pub fn decimal_year(self) -> f64 {
        2000.0 + (self.0 - MJD_AT_2000) / DAYS_PER_YEAR
    }

    /// Signed distance `self - earlier` in days.
    #[inline]
    pub fn days_since(self, earlier: Epoch) -> f64 {
        self.0 - earlier.0
    }
}

impl TryFrom<f64> for Epoch {
    type Error = SeriesError;

    fn try_from(mjd: f64) -> Result<Self, Self::Error> {
        Epoch::new(mjd)
    }
}

impl From<Epoch> for f64 {
    fn from(e: Epoch) -> f64 {
        e.0
    }
}

impl fmt::Display for Epoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Cartesian coordinate component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Component {
    X,
    Y,
    Z,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::X, Component::Y, Component::Z];

    pub fn index(self) -> usize {
        match self {
            Component::X => 0,
            Component::Y => 1,
            Component::Z => 2,
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Component::X => "X",
            Component::Y => "Y",
            Component::Z => "Z",
        })
    }
}

/// One coordinate component: strictly increasing epochs with finite values in meters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentSeries {
    component: Component,
    epochs: Vec<Epoch>,
    values: Vec<f64>,
}

impl ComponentSeries {
    pub fn new(
        component: Component,
        epochs: Vec<Epoch>,
        values: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        if epochs.is_empty() {
            return Err(SeriesError::Empty);
        }
        if epochs.len() != values.len() {
            return Err(SeriesError::EpochMismatch);
        }
        check_increasing(&epochs)?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SeriesError::NonFinite(i));
        }
        Ok(ComponentSeries {
            component,
            epochs,
            values,
        })
    }

    pub fn component(&self) -> Component {
        self.component
    }

    pub fn epochs(&self) -> &[Epoch] {
        &self.epochs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of samples (`p`).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Epoch, f64)> + '_ {
        self.epochs.iter().copied().zip(self.values.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Same epochs, new values. Used for centring and re-basing.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self, SeriesError> {
        ComponentSeries::new(
            self.component,
            self.epochs.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }
}

fn check_increasing(epochs: &[Epoch]) -> Result<(), SeriesError> {
    match epochs.windows(2).position(|w| w[1].0 <= w[0].0) {
        Some(i) => Err(SeriesError::NotIncreasing(i + 1)),
        None => Ok(()),
    }
}

/// A permanent station's X, Y, Z series on one shared epoch axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationSeries {
    station_id: String,
    country: Option<String>,
    components: [ComponentSeries; 3],
    nominal_interval_days: f64,
}

impl StationSeries {
    pub fn new(
        station_id: impl Into<String>,
        epochs: Vec<Epoch>,
        x: Vec<f64>,
        y: Vec<f64>,
        z: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        let components = [
            ComponentSeries::new(Component::X, epochs.clone(), x)?,
            ComponentSeries::new(Component::Y, epochs.clone(), y)?,
            ComponentSeries::new(Component::Z, epochs, z)?,
        ];
        Ok(StationSeries {
            station_id: station_id.into(),
            country: None,
            components,
            nominal_interval_days: 1.0,
        })
    }

    pub fn from_components(
        station_id: impl Into<String>,
        components: [ComponentSeries; 3],
    ) -> Result<Self, SeriesError> {
        let [x, y, z] = &components;
        if x.component != Component::X || y.component != Component::Y || z.component != Component::Z
        {
            return Err(SeriesError::EpochMismatch);
        }
        if x.epochs != y.epochs || x.epochs != z.epochs {
            return Err(SeriesError::EpochMismatch);
        }
        Ok(StationSeries {
            station_id: station_id.into(),
            country: None,
            components,
            nominal_interval_days: 1.0,
        })
    }

    pub fn with_country(mut self, country: impl Into<String>) -> Self {
        self.country = Some(country.into());
        self
    }

    pub fn with_nominal_interval(mut self, days: f64) -> Result<Self, SeriesError> {
        if !(days.is_finite() && days > 0.0) {
            return Err(SeriesError::Interval(days));
        }
        self.nominal_interval_days = days;
        Ok(self)
    }

    pub fn station_id(&self) -> &str {
        &self.station_id
    }

    pub fn country(&self) -> Option<&str> {
        self.country.as_deref()
    }

    pub fn nominal_interval_days(&self) -> f64 {
        self.nominal_interval_days
    }

    pub fn epochs(&self) -> &[Epoch] {
        &self.components[0].epochs
    }

    pub fn len(&self) -> usize {
        self.components[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn component(&self, c: Component) -> &ComponentSeries {
        &self.components[c.index()]
    }

    pub fn components(&self) -> &[ComponentSeries; 3] {
        &self.components
    }

    /// First and last epoch.
    pub fn time_span(&self) -> (Epoch, Epoch) {
        let e = self.epochs();
        (e[0], e[e.len() - 1])
    }

    /// Keeps only the rows whose epoch satisfies `keep`.
    pub fn retain_epochs(&self, keep: impl Fn(Epoch) -> bool) -> Result<Self, SeriesError> {
        let rows: Vec<usize> = (0..self.len())
            .filter(|&i| keep(self.epochs()[i]))
            .collect();
        let epochs: Vec<Epoch> = rows.iter().map(|&i| self.epochs()[i]).collect();
        let pick = |c: Component| -> Vec<f64> {
            rows.iter().map(|&i| self.component(c).values[i]).collect()
        };
        let mut out = StationSeries::new(
            self.station_id.clone(),
            epochs,
            pick(Component::X),
            pick(Component::Y),
            pick(Component::Z),
        )?;
        out.country = self.country.clone();
        out.nominal_interval_days = self.nominal_interval_days;
        Ok(out)
    }
}

/// Input encodings understood by [`parse_series`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFormat {
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TimeColumn {
    Mjd,
    DecimalYear,
}

/// Parses one station file.
///
/// The header is `epoch_mjd,x_m,y_m,z_m` (or `epoch_year,...`). Blank lines
/// and `#` comments are skipped; the comments `# station: ID`,
/// `# country: NAME` and `# interval_days: D` set metadata, otherwise the
/// station id is `default_station_id`. Rows are sorted by epoch and a
/// repeated epoch is rejected.
pub fn parse_series<R: Read>(
    mut input: R,
    format: SeriesFormat,
    default_station_id: &str,
) -> Result<StationSeries, SeriesError> {
    let SeriesFormat::Csv = format;
    let mut text = String::new();
    input.read_to_string(&mut text)?;

    let mut station_id = default_station_id.to_string();
    let mut country = None;
    let mut interval = 1.0;
    for (n, line) in text.lines().enumerate() {
        let Some(comment) = line.trim_start().strip_prefix('#') else {
            continue;
        };
        let Some((key, value)) = comment.split_once(':') else {
            continue;
        };
        let value = value.trim();
        match key.trim() {
            "station" if !value.is_empty() => station_id = value.to_string(),
            "country" if !value.is_empty() => country = Some(value.to_string()),
            "interval_days" => {
                interval = value.parse::<f64>().map_err(|_| SeriesError::Malformed {
                    line: n as u64 + 1,
                    message: format!("bad interval_days `{value}`"),
                })?
            }
            _ => {}
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let headers = reader.headers()?.clone();
    let names: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    let col = |name: &str| names.iter().position(|h| h == name);
    let (time_col, time_kind) = match (col("epoch_mjd"), col("epoch_year")) {
        (Some(i), None) => (i, TimeColumn::Mjd),
        (None, Some(i)) => (i, TimeColumn::DecimalYear),
        _ => {
            return Err(SeriesError::Header(
                headers.iter().collect::<Vec<_>>().join(","),
            ))
        }
    };
    let (Some(xc), Some(yc), Some(zc)) = (col("x_m"), col("y_m"), col("z_m")) else {
        return Err(SeriesError::Header(
            headers.iter().collect::<Vec<_>>().join(","),
        ));
    };
    if names.len() != 4 {
        return Err(SeriesError::Header(
            headers.iter().collect::<Vec<_>>().join(","),
        ));
    }

    // (epoch, x, y, z, line)
    let mut rows: Vec<(Epoch, f64, f64, f64, u64)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 4 {
            return Err(SeriesError::Malformed {
                line,
                message: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let field = |i: usize, name: &str| -> Result<f64, SeriesError> {
            let raw = &record[i];
            let v: f64 = raw.parse().map_err(|_| SeriesError::Malformed {
                line,
                message: format!("column {name}: `{raw}` is not a number"),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(SeriesError::Malformed {
                    line,
                    message: format!("column {name}: non-finite value"),
                })
            }
        };
        let t = field(time_col, &names[time_col])?;
        let epoch = match time_kind {
            TimeColumn::Mjd => Epoch::new(t),
            TimeColumn::DecimalYear => Epoch::from_decimal_year(t),
        }
        .map_err(|_| SeriesError::Malformed {
            line,
            message: format!("epoch {t} is not a positive MJD"),
        })?;
        rows.push((
            epoch,
            field(xc, "x_m")?,
            field(yc, "y_m")?,
            field(zc, "z_m")?,
            line,
        ));
    }

    if rows.len() < MIN_ROWS {
        return Err(SeriesError::TooShort {
            count: rows.len(),
            min: MIN_ROWS,
        });
    }
    rows.sort_by(|a, b| a.0.mjd().total_cmp(&b.0.mjd()));
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        let line = w[0].4.max(w[1].4);
        return Err(SeriesError::DuplicateEpoch {
            line,
            mjd: w[0].0.mjd(),
        });
    }

    let mut series = StationSeries::new(
        station_id,
        rows.iter().map(|r| r.0).collect(),
        rows.iter().map(|r| r.1).collect(),
        rows.iter().map(|r| r.2).collect(),
        rows.iter().map(|r| r.3).collect(),
    )?
    .with_nominal_interval(interval)?;
    series.country = country;
    Ok(series)
}

/// Writes a station in the CSV layout accepted by [`parse_series`].
/// Numbers use the shortest representation that parses back to the same bits.
pub fn write_series_csv<W: Write>(series: &StationSeries, out: W) -> Result<(), SeriesError> {
    let mut out = out;
    writeln!(out, "# station: {}", series.station_id)?;
    if let Some(c) = &series.country {
        writeln!(out, "# country: {c}")?;
    }
    if series.nominal_interval_days != 1.0 {
        writeln!(out, "# interval_days: {}", series.nominal_interval_days)?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch_mjd", "x_m", "y_m", "z_m"])?;
    let [x, y, z] = &series.components;
    for i in 0..series.len() {
        w.write_record([
            series.epochs()[i].mjd().to_string(),
            x.values[i].to_string(),
            y.values[i].to_string(),
            z.values[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Whether a series has missing epochs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataState {
    Continuous,
    Discontinuous,
}

impl fmt::Display for DataState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataState::Continuous => "continuous",
            DataState::Discontinuous => "discontinuous",
        })
    }
}

/// A hole between two consecutive observed epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gap {
    pub start: Epoch,
    pub end: Epoch,
    pub missing_count: u64,
}

impl Gap {
    pub fn span_days(&self) -> f64 {
        self.end.days_since(self.start)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub gaps: Vec<Gap>,
    pub state: DataState,
    /// Largest epoch spacing among the reported gaps; 0 when continuous.
    pub largest_gap_days: f64,
}

/// Flags every consecutive pair of epochs further apart than
/// `gap_factor * nominal_interval_days`. Only epochs are inspected.
pub fn detect_gaps(series: &StationSeries, gap_factor: f64) -> Result<GapReport, SeriesError> {
    detect_gaps_in(series.epochs(), series.nominal_interval_days, gap_factor)
}

pub fn detect_gaps_in(
    epochs: &[Epoch],
    nominal_interval_days: f64,
    gap_factor: f64,
) -> Result<GapReport, SeriesError> {
    if !(gap_factor.is_finite() && gap_factor >= 1.0) {
        return Err(SeriesError::Malformed {
            line: 0,
            message: format!("gap factor must be >= 1, got {gap_factor}"),
        });
    }
    if !(nominal_interval_days.is_finite() && nominal_interval_days > 0.0) {
        return Err(SeriesError::Interval(nominal_interval_days));
    }
    let limit = gap_factor * nominal_interval_days;
    let gaps: Vec<Gap> = epochs
        .windows(2)
        .filter_map(|w| {
            let delta = w[1].days_since(w[0]);
            (delta > limit).then(|| Gap {
                start: w[0],
                end: w[1],
                missing_count: ((delta / nominal_interval_days).round() as u64).saturating_sub(1),
            })
        })
        .collect();
    let largest_gap_days = gaps.iter().map(Gap::span_days).fold(0.0, f64::max);
    let state = if gaps.is_empty() {
        DataState::Continuous
    } else {
        DataState::Discontinuous
    };
    Ok(GapReport {
        gaps,
        state,
        largest_gap_days,
    })
}

/// Values relative to the component mean; epochs unchanged.
pub fn compute_anomaly(series: &ComponentSeries) -> ComponentSeries {
    let mean = series.mean();
    ComponentSeries {
        component: series.component,
        epochs: series.epochs.clone(),
        values: series.values.iter().map(|v| v - mean).collect(),
    }
}

/// Peak-to-peak range `max - min` in meters.
pub fn amplitude(series: &ComponentSeries) -> f64 {
    let (lo, hi) = series
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    hi - lo
}
