//! Generalized regression neural network (Gaussian-kernel Nadaraya-Watson)
//! predictor over a rolling training window.
//!
//! The input feature is the scalar epoch: every window entry `(t_j, z_j)` is
//! weighted by `K(|t - t_j| / h)` and the prediction for target epoch `t` is
//! the normalised weighted sum of the `z_j`. The window is the `v` most recent
//! values; in [`UpdateMode::Recursive`] each prediction replaces the oldest
//! entry, so later predictions are built from earlier ones.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::ForecastError;
use crate::series::{ComponentSeries, Epoch};

/// How the kernel bandwidth `h` (in days) is obtained for a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    Fixed(f64),
    /// Population standard deviation of the window epochs. A one-entry window
    /// has zero spread and falls back to [`BandwidthRule::MeanSpacing`].
    #[default]
    WindowStd,
    /// Mean spacing of the window epochs; for a one-entry window, the
    /// distance from that entry to the target.
    MeanSpacing,
}

impl BandwidthRule {
    pub fn validate(&self) -> Result<(), ForecastError> {
        match *self {
            BandwidthRule::Fixed(h) if !(h.is_finite() && h > 0.0) => {
                Err(ForecastError::InvalidBandwidth(h))
            }
            _ => Ok(()),
        }
    }

    /// Resolves `h` for a window and target. Depends only on epoch offsets,
    /// so shifting the whole window and target in time leaves it unchanged.
    pub fn resolve(&self, window: &GrnnState, target: Epoch) -> Result<f64, ForecastError> {
        let first = window
            .entries
            .front()
            .ok_or(ForecastError::EmptyWindow)?
            .epoch;
        let offsets = window.entries.iter().map(|e| e.epoch.days_since(first));
        let h = resolve_from_offsets(*self, offsets, target.days_since(first))?;
        Ok(h)
    }
}

/// `offsets` are epochs measured from any common origin; `target` likewise.
fn resolve_from_offsets(
    rule: BandwidthRule,
    offsets: impl ExactSizeIterator<Item = f64> + Clone,
    target: f64,
) -> Result<f64, ForecastError> {
    let n = offsets.len();
    if n == 0 {
        return Err(ForecastError::EmptyWindow);
    }
    let mean_spacing = |offsets: &mut dyn Iterator<Item = f64>| -> f64 {
        let first = offsets.next().unwrap_or(0.0);
        let last = offsets.last();
        match last {
            Some(last) => (last - first) / (n - 1) as f64,
            None => target - first,
        }
    };
    let h = match rule {
        BandwidthRule::Fixed(h) => h,
        BandwidthRule::WindowStd => {
            let mean = offsets.clone().sum::<f64>() / n as f64;
            let var = offsets
                .clone()
                .map(|t| (t - mean) * (t - mean))
                .sum::<f64>()
                / n as f64;
            let sd = var.sqrt();
            if sd > 0.0 {
                sd
            } else {
                mean_spacing(&mut offsets.clone())
            }
        }
        BandwidthRule::MeanSpacing => mean_spacing(&mut offsets.clone()),
    };
    if h.is_finite() && h > 0.0 {
        Ok(h)
    } else {
        Err(ForecastError::InvalidBandwidth(h))
    }
}

/// Window update policy after each prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// The prediction itself enters the window.
    #[default]
    Recursive,
    /// The observed value enters the window.
    TeacherForced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrnnConfig {
    /// Training size `v`.
    pub training_size: usize,
    pub bandwidth: BandwidthRule,
    /// Error threshold `T` in meters for the adaptive training-size loop.
    /// `None` disables the loop.
    pub threshold: Option<f64>,
    pub max_training_size: usize,
    /// Step by which the adaptive loop grows `v`.
    pub training_size_step: usize,
    pub mode: UpdateMode,
}

impl Default for GrnnConfig {
    fn default() -> Self {
        GrnnConfig {
            training_size: 100,
            bandwidth: BandwidthRule::WindowStd,
            threshold: None,
            max_training_size: 1000,
            training_size_step: 1,
            mode: UpdateMode::Recursive,
        }
    }
}

impl GrnnConfig {
    pub fn new(training_size: usize) -> Self {
        GrnnConfig {
            training_size,
            max_training_size: training_size.max(1000),
            ..Default::default()
        }
    }

    pub fn with_bandwidth(mut self, rule: BandwidthRule) -> Self {
        self.bandwidth = rule;
        self
    }

    pub fn with_mode(mut self, mode: UpdateMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self
    }

    pub fn with_max_training_size(mut self, max: usize) -> Self {
        self.max_training_size = max;
        self
    }

    pub fn with_training_size_step(mut self, step: usize) -> Self {
        self.training_size_step = step;
        self
    }

    pub fn validate(&self) -> Result<(), ForecastError> {
        if self.training_size == 0 {
            return Err(ForecastError::Config(
                "training size must be at least 1".into(),
            ));
        }
        if self.training_size > self.max_training_size {
            return Err(ForecastError::Config(format!(
                "training size {} exceeds maximum {}",
                self.training_size, self.max_training_size
            )));
        }
        if self.training_size_step == 0 {
            return Err(ForecastError::Config(
                "training size step must be at least 1".into(),
            ));
        }
        if let Some(t) = self.threshold {
            if t.is_nan() || t <= 0.0 {
                return Err(ForecastError::Config(format!(
                    "threshold must be positive, got {t}"
                )));
            }
        }
        self.bandwidth.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Observed,
    Predicted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowEntry {
    pub epoch: Epoch,
    pub value: f64,
    pub origin: Origin,
}

/// The rolling training set: `v` entries with strictly increasing epochs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrnnState {
    entries: VecDeque<WindowEntry>,
}

impl GrnnState {
    pub fn from_entries(
        entries: impl IntoIterator<Item = WindowEntry>,
    ) -> Result<Self, ForecastError> {
        let entries: VecDeque<WindowEntry> = entries.into_iter().collect();
        if entries.is_empty() {
            return Err(ForecastError::EmptyWindow);
        }
        for (a, b) in entries.iter().zip(entries.iter().skip(1)) {
            if b.epoch <= a.epoch {
                return Err(ForecastError::TargetNotAfterWindow {
                    target: b.epoch.mjd(),
                    last: a.epoch.mjd(),
                });
            }
        }
        Ok(GrnnState { entries })
    }

    /// A window of observed values.
    pub fn from_observations(
        points: impl IntoIterator<Item = (Epoch, f64)>,
    ) -> Result<Self, ForecastError> {
        GrnnState::from_entries(points.into_iter().map(|(epoch, value)| WindowEntry {
            epoch,
            value,
            origin: Origin::Observed,
        }))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl ExactSizeIterator<Item = &WindowEntry> + Clone {
        self.entries.iter()
    }

    pub fn last_epoch(&self) -> Epoch {
        self.entries.back().expect("window is never empty").epoch
    }

    pub fn predicted_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.origin == Origin::Predicted)
            .count()
    }

    fn check_target(&self, target: Epoch) -> Result<(), ForecastError> {
        let last = self.last_epoch();
        if target > last {
            Ok(())
        } else {
            Err(ForecastError::TargetNotAfterWindow {
                target: target.mjd(),
                last: last.mjd(),
            })
        }
    }

    fn push(&mut self, entry: WindowEntry) {
        self.entries.pop_front();
        self.entries.push_back(entry);
    }
}

/// Normalised kernel weights, one per window entry, oldest first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Gaussian kernel `exp(-a^2 / 2) / sqrt(2 pi)`.
#[inline]
pub fn gaussian_kernel(a: f64) -> f64 {
    debug_assert!((INV_SQRT_2PI - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-17);
    (-0.5 * a * a).exp() * INV_SQRT_2PI
}

fn weights_from_offsets(
    distances: impl Iterator<Item = f64>,
    h: f64,
    out: &mut Vec<f64>,
) -> Result<(), ForecastError> {
    out.clear();
    out.extend(distances.map(|d| gaussian_kernel(d / h)));
    let total: f64 = out.iter().sum();
    if total == 0.0 || !total.is_finite() {
        return Err(ForecastError::BandwidthTooSmall { h });
    }
    for w in out.iter_mut() {
        *w /= total;
    }
    Ok(())
}

/// Kernel weights of each window entry for `target`, with distances in days.
pub fn compute_weights(
    target: Epoch,
    window: &GrnnState,
    h: f64,
) -> Result<WeightVector, ForecastError> {
    if !(h.is_finite() && h > 0.0) {
        return Err(ForecastError::InvalidBandwidth(h));
    }
    window.check_target(target)?;
    let mut w = Vec::with_capacity(window.len());
    weights_from_offsets(
        window
            .entries
            .iter()
            .map(|e| target.days_since(e.epoch).abs()),
        h,
        &mut w,
    )?;
    Ok(WeightVector(w))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub value: f64,
    pub weights: WeightVector,
    pub bandwidth: f64,
}

/// Weighted sum of the window values. Summed as offsets from the first value,
/// which keeps precision on large ECEF coordinates, then held inside the
/// window's value range.
/// `base + sum w (z - base)` with `base` the oldest value, clamped to
/// `[lo, hi]`. Four interleaved partial sums, combined pairwise.
fn weighted_value(values: &[f64], weights: &[f64], (lo, hi): (f64, f64)) -> f64 {
    let base = values.first().copied().unwrap_or(0.0);
    let mut acc = [-0.0f64; 4];
    let mut zs = values.chunks_exact(4);
    let mut ws = weights.chunks_exact(4);
    for (z, w) in zs.by_ref().zip(ws.by_ref()) {
        for i in 0..4 {
            acc[i] += w[i] * (z[i] - base);
        }
    }
    for (i, (&z, &w)) in zs.remainder().iter().zip(ws.remainder()).enumerate() {
        acc[i] += w * (z - base);
    }
    let delta = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    (base + delta).clamp(lo, hi)
}

fn value_range(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &z| {
            (lo.min(z), hi.max(z))
        })
}

/// Minimum and maximum of the last `width` values of a growing buffer.
#[derive(Debug, Default)]
struct SlidingRange {
    mins: VecDeque<usize>,
    maxs: VecDeque<usize>,
}

impl SlidingRange {
    fn push(&mut self, values: &[f64], index: usize) {
        let z = values[index];
        while self.mins.back().is_some_and(|&j| values[j] >= z) {
            self.mins.pop_back();
        }
        self.mins.push_back(index);
        while self.maxs.back().is_some_and(|&j| values[j] <= z) {
            self.maxs.pop_back();
        }
        self.maxs.push_back(index);
    }

    fn range(&mut self, values: &[f64], width: usize) -> (f64, f64) {
        let start = values.len() - width;
        while self.mins.front().is_some_and(|&j| j < start) {
            self.mins.pop_front();
        }
        while self.maxs.front().is_some_and(|&j| j < start) {
            self.maxs.pop_front();
        }
        (values[self.mins[0]], values[self.maxs[0]])
    }
}

/// One GRNN prediction for `target` from the current window.
pub fn predict_one(
    state: &GrnnState,
    target: Epoch,
    config: &GrnnConfig,
) -> Result<Prediction, ForecastError> {
    let h = config.bandwidth.resolve(state, target)?;
    let weights = compute_weights(target, state, h)?;
    let values: Vec<f64> = state.entries.iter().map(|e| e.value).collect();
    let value = weighted_value(&values, weights.as_slice(), value_range(&values));
    Ok(Prediction {
        value,
        weights,
        bandwidth: h,
    })
}

/// Returns the window after a prediction at `predicted.0`: the oldest entry
/// leaves and the prediction (recursive) or the observation (teacher-forced)
/// enters.
pub fn advance(
    state: &GrnnState,
    predicted: (Epoch, f64),
    observed: Option<f64>,
    config: &GrnnConfig,
) -> Result<GrnnState, ForecastError> {
    let mut next = state.clone();
    advance_in_place(&mut next, predicted, observed, config.mode)?;
    Ok(next)
}

fn advance_in_place(
    state: &mut GrnnState,
    (epoch, y_hat): (Epoch, f64),
    observed: Option<f64>,
    mode: UpdateMode,
) -> Result<(), ForecastError> {
    state.check_target(epoch)?;
    let entry = match (mode, observed) {
        (UpdateMode::Recursive, _) => WindowEntry {
            epoch,
            value: y_hat,
            origin: Origin::Predicted,
        },
        (UpdateMode::TeacherForced, Some(y)) => WindowEntry {
            epoch,
            value: y,
            origin: Origin::Observed,
        },
        (UpdateMode::TeacherForced, None) => {
            return Err(ForecastError::MissingObservation(epoch.mjd()))
        }
    };
    state.push(entry);
    Ok(())
}

/// Reuses the last weight vector when the window sits at the same epoch
/// offsets from the target as before. Bandwidth rules depend only on those
/// offsets, so on a regularly sampled series the kernels are evaluated once.
#[derive(Debug, Default)]
struct WeightCache {
    offsets: Vec<f64>,
    weights: Vec<f64>,
    bandwidth: f64,
}

impl WeightCache {
    /// Recomputes the weights for `window` (oldest first) and `target`.
    fn refresh(
        &mut self,
        window: &[Epoch],
        target: Epoch,
        rule: BandwidthRule,
    ) -> Result<(), ForecastError> {
        self.offsets.clear();
        self.offsets
            .extend(window.iter().map(|&e| target.days_since(e)));
        let first = window[0];
        let h = resolve_from_offsets(
            rule,
            window.iter().map(|e| e.days_since(first)),
            target.days_since(first),
        )?;
        if let Err(e) = weights_from_offsets(self.offsets.iter().copied(), h, &mut self.weights) {
            self.weights.clear();
            return Err(e);
        }
        self.bandwidth = h;
        Ok(())
    }

    fn same_offsets(&self, window: &[Epoch], target: Epoch) -> bool {
        !self.weights.is_empty()
            && self
                .offsets
                .iter()
                .zip(window)
                .all(|(&d, &e)| target.days_since(e) == d)
    }
}

/// True when every epoch is an integer small enough that differences of
/// epochs are exact, so equal spacings imply equal offsets bit for bit.
fn integral_epochs(epochs: &[Epoch]) -> bool {
    epochs
        .iter()
        .all(|e| e.mjd().fract() == 0.0 && e.mjd().abs() < 9.0e15)
}

/// One step of a backtest walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForecastRecord {
    /// Index of the target in the source series.
    pub index: usize,
    pub epoch: Epoch,
    pub predicted: f64,
    pub observed: f64,
    pub bandwidth: f64,
    /// How many window entries were themselves predictions.
    pub predicted_inputs: usize,
    /// Training size used for this prediction.
    pub training_size: usize,
    /// False only when the adaptive loop exhausted `v` without meeting `T`.
    pub threshold_met: bool,
}

impl ForecastRecord {
    pub fn error(&self) -> f64 {
        self.observed - self.predicted
    }
}

/// Walks every epoch after the first `v`, predicting each from the window
/// and then advancing it per the configured mode. Missing epochs are never
/// targets: the first prediction after a hole uses the pre-hole window.
pub fn forecast_series(
    series: &ComponentSeries,
    config: &GrnnConfig,
) -> Result<Vec<ForecastRecord>, ForecastError> {
    forecast_series_from(series, config, config.training_size)
}

/// As [`forecast_series`], with the first target at `first_target`
/// (`>= v`). The window is seeded with the `v` observations just before it.
pub fn forecast_series_from(
    series: &ComponentSeries,
    config: &GrnnConfig,
    first_target: usize,
) -> Result<Vec<ForecastRecord>, ForecastError> {
    config.validate()?;
    let v = config.training_size;
    let p = series.len();
    if p <= v || first_target >= p {
        return Err(ForecastError::NothingToPredict {
            count: p,
            window: v,
        });
    }
    if first_target < v {
        return Err(ForecastError::InsufficientHistory {
            index: first_target,
            needed: v,
        });
    }
    if config.threshold.is_some() {
        return forecast_adaptive(series, config, first_target);
    }

    let epochs = series.epochs();
    let values = series.values();
    let integral = integral_epochs(epochs);
    let mut window: Vec<f64> = Vec::with_capacity(v + p - first_target);
    window.extend_from_slice(&values[first_target - v..first_target]);
    let mut range = SlidingRange::default();
    for j in 0..v {
        range.push(&window, j);
    }
    let mut cache = WeightCache::default();
    // consecutive equal spacings ending at the current target
    let mut run = 0usize;
    for j in first_target.saturating_sub(v + 1).max(2)..first_target {
        run = if epochs[j].days_since(epochs[j - 1]) == epochs[j - 1].days_since(epochs[j - 2]) {
            run + 1
        } else {
            1
        };
    }
    let mut out = Vec::with_capacity(p - first_target);
    for k in first_target..p {
        let target = epochs[k];
        let span = &epochs[k - v..k];
        let spacing = target.days_since(epochs[k - 1]);
        run = if k >= 2 && spacing == epochs[k - 1].days_since(epochs[k - 2]) {
            run + 1
        } else {
            1
        };
        let reuse = if integral {
            run > v && !cache.weights.is_empty()
        } else {
            cache.same_offsets(span, target)
        };
        if !reuse {
            cache.refresh(span, target, config.bandwidth)?;
        }
        let bounds = range.range(&window, v);
        let y_hat = weighted_value(&window[window.len() - v..], &cache.weights, bounds);
        out.push(ForecastRecord {
            index: k,
            epoch: target,
            predicted: y_hat,
            observed: values[k],
            bandwidth: cache.bandwidth,
            predicted_inputs: match config.mode {
                UpdateMode::Recursive => (k - first_target).min(v),
                UpdateMode::TeacherForced => 0,
            },
            training_size: v,
            threshold_met: true,
        });
        window.push(match config.mode {
            UpdateMode::Recursive => y_hat,
            UpdateMode::TeacherForced => values[k],
        });
        range.push(&window, window.len() - 1);
    }
    Ok(out)
}

fn forecast_adaptive(
    series: &ComponentSeries,
    config: &GrnnConfig,
    first_target: usize,
) -> Result<Vec<ForecastRecord>, ForecastError> {
    (first_target..series.len())
        .map(|k| {
            let r = adaptive_predict(series, k, config)?;
            Ok(ForecastRecord {
                index: k,
                epoch: series.epochs()[k],
                predicted: r.predicted,
                observed: series.values()[k],
                bandwidth: r.bandwidth,
                predicted_inputs: 0,
                training_size: r.training_size,
                threshold_met: r.threshold_met,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdaptiveOutcome {
    pub predicted: f64,
    pub training_size: usize,
    /// `y_k - y_hat_k`.
    pub error: f64,
    pub bandwidth: f64,
    pub threshold_met: bool,
}

/// Predicts the value at `index` from the `v` preceding observations,
/// growing `v` while `|E| >= T`. Needs the truth at `index`, so this is a
/// backtest procedure. If `v` runs out, the attempt with the smallest `|E|`
/// is returned with `threshold_met = false`.
pub fn adaptive_predict(
    series: &ComponentSeries,
    index: usize,
    config: &GrnnConfig,
) -> Result<AdaptiveOutcome, ForecastError> {
    config.validate()?;
    let v0 = config.training_size;
    if index < v0 {
        return Err(ForecastError::InsufficientHistory { index, needed: v0 });
    }
    if index >= series.len() {
        return Err(ForecastError::NothingToPredict {
            count: series.len(),
            window: v0,
        });
    }
    let threshold = config.threshold.unwrap_or(f64::INFINITY);
    let limit = index.min(config.max_training_size);
    let target = series.epochs()[index];
    let truth = series.values()[index];

    let mut best: Option<AdaptiveOutcome> = None;
    let mut v = v0;
    while v <= limit {
        let state = GrnnState::from_observations(
            series.epochs()[index - v..index]
                .iter()
                .copied()
                .zip(series.values()[index - v..index].iter().copied()),
        )?;
        let p = predict_one(&state, target, config)?;
        let error = truth - p.value;
        let attempt = AdaptiveOutcome {
            predicted: p.value,
            training_size: v,
            error,
            bandwidth: p.bandwidth,
            threshold_met: error.abs() < threshold,
        };
        if attempt.threshold_met {
            return Ok(attempt);
        }
        if best.is_none_or(|b| error.abs() < b.error.abs()) {
            best = Some(attempt);
        }
        v += config.training_size_step;
    }
    Ok(best.expect("at least one attempt since v0 <= limit"))
}
