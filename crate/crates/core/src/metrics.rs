//! Accuracy criteria over prediction/truth pairs: sMAPE (percent), the
//! sample standard deviation of the residuals, and the mean absolute residual.

use serde::{Deserialize, Serialize};

use crate::error::MetricError;

/// Predictions and the values they target. Residuals are `y - y_hat`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionPairs {
    predicted: Vec<f64>,
    observed: Vec<f64>,
}

impl PredictionPairs {
    pub fn new(predicted: Vec<f64>, observed: Vec<f64>) -> Result<Self, MetricError> {
        if predicted.len() != observed.len() {
            return Err(MetricError::LengthMismatch(predicted.len(), observed.len()));
        }
        if predicted.is_empty() {
            return Err(MetricError::Empty);
        }
        if let Some(i) = predicted
            .iter()
            .zip(&observed)
            .position(|(a, b)| !a.is_finite() || !b.is_finite())
        {
            return Err(MetricError::NonFinite(i));
        }
        Ok(PredictionPairs {
            predicted,
            observed,
        })
    }

    /// From `(y_hat, y)` tuples.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, MetricError> {
        let (p, o) = pairs.into_iter().unzip();
        PredictionPairs::new(p, o)
    }

    pub fn len(&self) -> usize {
        self.predicted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicted.is_empty()
    }

    pub fn predicted(&self) -> &[f64] {
        &self.predicted
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    pub fn residuals(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.observed
            .iter()
            .zip(&self.predicted)
            .map(|(y, p)| y - p)
    }
}

/// Which sMAPE denominator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmapeVariant {
    /// `100/N * sum |y_i - y_hat_i| / (|y_i| + |y_hat_i|)`.
    #[default]
    PerTerm,
    /// `100 * sum |y_i - y_hat_i| / (|y_N| + |y_hat_N|)`: one fixed
    /// denominator from the last pair and no division by `N`. Kept for audit.
    FixedDenominator,
}

pub fn smape(pairs: &PredictionPairs) -> Result<f64, MetricError> {
    smape_with(pairs, SmapeVariant::PerTerm)
}

pub fn smape_with(pairs: &PredictionPairs, variant: SmapeVariant) -> Result<f64, MetricError> {
    let n = pairs.len();
    let terms = pairs.observed.iter().zip(&pairs.predicted);
    match variant {
        SmapeVariant::PerTerm => {
            let mut total = 0.0;
            for (i, (y, p)) in terms.enumerate() {
                let den = y.abs() + p.abs();
                if den == 0.0 {
                    return Err(MetricError::UndefinedSmapeTerm(i));
                }
                total += (y - p).abs() / den;
            }
            Ok(100.0 * total / n as f64)
        }
        SmapeVariant::FixedDenominator => {
            let den = pairs.observed[n - 1].abs() + pairs.predicted[n - 1].abs();
            if den == 0.0 {
                return Err(MetricError::UndefinedSmapeTerm(n - 1));
            }
            Ok(100.0 * terms.map(|(y, p)| (y - p).abs()).sum::<f64>() / den)
        }
    }
}

/// Sample standard deviation (divisor `N - 1`) of the residuals.
pub fn std_of_errors(pairs: &PredictionPairs) -> Result<f64, MetricError> {
    let n = pairs.len();
    if n < 2 {
        return Err(MetricError::StdUndefined(n));
    }
    let mean = pairwise_sum(&pairs.residuals().collect::<Vec<_>>()) / n as f64;
    let sq: Vec<f64> = pairs.residuals().map(|h| (h - mean) * (h - mean)).collect();
    Ok((pairwise_sum(&sq) / (n - 1) as f64).sqrt())
}

pub fn mean_abs_error(pairs: &PredictionPairs) -> f64 {
    let abs: Vec<f64> = pairs.residuals().map(f64::abs).collect();
    pairwise_sum(&abs) / pairs.len() as f64
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 128;
    if xs.len() <= BLOCK {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub smape_percent: f64,
    pub std_m: f64,
    pub mabs_m: f64,
    pub n: usize,
    /// `y_i - y_hat_i`, in prediction order.
    pub residuals: Vec<f64>,
}

impl MetricsReport {
    pub fn compute(pairs: &PredictionPairs) -> Result<Self, MetricError> {
        MetricsReport::compute_with(pairs, SmapeVariant::PerTerm)
    }

    pub fn compute_with(
        pairs: &PredictionPairs,
        variant: SmapeVariant,
    ) -> Result<Self, MetricError> {
        Ok(MetricsReport {
            smape_percent: smape_with(pairs, variant)?,
            std_m: std_of_errors(pairs)?,
            mabs_m: mean_abs_error(pairs),
            n: pairs.len(),
            residuals: pairs.residuals().collect(),
        })
    }
}
