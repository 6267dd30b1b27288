//! Deterministic synthetic station series for desk-scale experiments.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::series::{Component, Epoch, StationSeries, DAYS_PER_YEAR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    Constant,
    Linear,
    TrendPlusAnnual,
    GappedTrend,
}

/// Shape of a synthetic series. Time `t` is days since `start_mjd`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub station_id: String,
    pub start_mjd: f64,
    /// Per-component level `a` (X, Y, Z), meters.
    pub offsets_m: [f64; 3],
    /// Trend `b`, meters per day.
    pub slope_m_per_day: f64,
    /// Annual amplitude `A`, meters.
    pub annual_amplitude_m: f64,
    /// Annual phase of the X component; Y and Z are shifted by pi/3 and 2pi/3.
    pub phase_rad: f64,
    /// Standard deviation of white noise, meters.
    pub noise_m: f64,
    /// Removed spans as `(first day, length in days)`, for `GappedTrend`.
    pub gaps: Vec<(usize, usize)>,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            station_id: "SYNT".into(),
            start_mjd: 53_430.0,
            offsets_m: [4_053_738.0, 617_101.0, 4_869_369.0],
            slope_m_per_day: 5e-5,
            annual_amplitude_m: 0.005,
            phase_rad: 0.0,
            noise_m: 0.001,
            gaps: Vec::new(),
        }
    }
}

/// Builds a daily series of `length` epochs (before any gaps are cut).
///
/// `TrendPlusAnnual` is `a + b t + A sin(2 pi t / 365.25 + phi) + N(0, sigma)`;
/// `GappedTrend` is the same series with `params.gaps` removed, so a gapped
/// and an ungapped series from one seed agree on every shared epoch.
pub fn generate_synthetic(
    kind: SyntheticKind,
    length: usize,
    seed: u64,
    params: &SyntheticParams,
) -> Result<StationSeries, HarnessError> {
    if length < 10 {
        return Err(HarnessError::Params(format!(
            "length must be at least 10, got {length}"
        )));
    }
    let finite = [
        params.start_mjd,
        params.slope_m_per_day,
        params.annual_amplitude_m,
        params.phase_rad,
        params.noise_m,
    ]
    .iter()
    .chain(&params.offsets_m)
    .all(|v| v.is_finite());
    if !finite || params.noise_m < 0.0 || params.start_mjd <= 0.0 {
        return Err(HarnessError::Params(
            "non-finite or negative parameter".into(),
        ));
    }
    if kind == SyntheticKind::GappedTrend {
        if params.gaps.is_empty() {
            return Err(HarnessError::Params(
                "gapped series needs at least one gap span".into(),
            ));
        }
        for &(start, len) in &params.gaps {
            if len == 0 || start == 0 || start + len >= length {
                return Err(HarnessError::Params(format!(
                    "gap ({start}, {len}) must be non-empty and strictly inside 0..{length}"
                )));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise =
        Normal::new(0.0, params.noise_m).map_err(|e| HarnessError::Params(e.to_string()))?;
    let mut columns: [Vec<f64>; 3] = Default::default();
    for c in Component::ALL {
        let a = params.offsets_m[c.index()];
        let phase = params.phase_rad + c.index() as f64 * PI / 3.0;
        columns[c.index()] = (0..length)
            .map(|i| {
                let t = i as f64;
                match kind {
                    SyntheticKind::Constant => a,
                    SyntheticKind::Linear => a + params.slope_m_per_day * t,
                    SyntheticKind::TrendPlusAnnual | SyntheticKind::GappedTrend => {
                        let annual = params.annual_amplitude_m
                            * (2.0 * PI * t / DAYS_PER_YEAR + phase).sin();
                        let eps = if params.noise_m > 0.0 {
                            noise.sample(&mut rng)
                        } else {
                            0.0
                        };
                        a + params.slope_m_per_day * t + annual + eps
                    }
                }
            })
            .collect();
    }

    let keep: Vec<usize> = (0..length)
        .filter(|&i| {
            kind != SyntheticKind::GappedTrend
                || !params.gaps.iter().any(|&(s, l)| (s..s + l).contains(&i))
        })
        .collect();
    let epochs = keep
        .iter()
        .map(|&i| Epoch::new(params.start_mjd + i as f64))
        .collect::<Result<Vec<_>, _>>()?;
    let pick = |c: usize| keep.iter().map(|&i| columns[c][i]).collect::<Vec<f64>>();
    Ok(StationSeries::new(
        params.station_id.clone(),
        epochs,
        pick(0),
        pick(1),
        pick(2),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{amplitude, detect_gaps, DataState};
    use crate::theta::estimate_theta_values;

    #[test]
    fn constant_has_zero_amplitude() {
        for seed in [0, 7, 12345] {
            let s = generate_synthetic(
                SyntheticKind::Constant,
                50,
                seed,
                &SyntheticParams::default(),
            )
            .unwrap();
            for c in Component::ALL {
                assert_eq!(amplitude(s.component(c)), 0.0);
            }
        }
    }

    #[test]
    fn linear_slope_is_recovered() {
        let params = SyntheticParams {
            slope_m_per_day: 0.01,
            ..Default::default()
        };
        let s = generate_synthetic(SyntheticKind::Linear, 40, 1, &params).unwrap();
        let vals = &s.component(Component::Y).values()[10..30];
        let th = estimate_theta_values(vals).unwrap();
        assert!((th - 0.01).abs() < 1e-9, "{th}");
    }

    #[test]
    fn thirty_day_hole_is_one_gap() {
        let params = SyntheticParams {
            gaps: vec![(200, 30)],
            ..Default::default()
        };
        let s = generate_synthetic(SyntheticKind::GappedTrend, 500, 3, &params).unwrap();
        assert_eq!(s.len(), 470);
        let r = detect_gaps(&s, 1.5).unwrap();
        assert_eq!(r.state, DataState::Discontinuous);
        assert_eq!(r.gaps.len(), 1);
        assert_eq!(r.gaps[0].missing_count, 30);
        assert_eq!(r.largest_gap_days, 31.0);
    }

    #[test]
    fn deterministic_and_paired() {
        let p = SyntheticParams {
            gaps: vec![(20, 5)],
            ..Default::default()
        };
        let a = generate_synthetic(SyntheticKind::TrendPlusAnnual, 100, 9, &p).unwrap();
        let b = generate_synthetic(SyntheticKind::TrendPlusAnnual, 100, 9, &p).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(SyntheticKind::TrendPlusAnnual, 100, 10, &p).unwrap();
        assert_ne!(a, c);
        let g = generate_synthetic(SyntheticKind::GappedTrend, 100, 9, &p).unwrap();
        let shared = a.retain_epochs(|e| g.epochs().contains(&e)).unwrap();
        assert_eq!(shared, g);
    }

    #[test]
    fn rejects_bad_params() {
        let p = SyntheticParams::default();
        assert!(generate_synthetic(SyntheticKind::Linear, 9, 0, &p).is_err());
        assert!(generate_synthetic(SyntheticKind::GappedTrend, 100, 0, &p).is_err());
        let bad = SyntheticParams {
            gaps: vec![(90, 20)],
            ..Default::default()
        };
        assert!(generate_synthetic(SyntheticKind::GappedTrend, 100, 0, &bad).is_err());
        let neg = SyntheticParams {
            noise_m: -1.0,
            ..Default::default()
        };
        assert!(generate_synthetic(SyntheticKind::TrendPlusAnnual, 100, 0, &neg).is_err());
    }
}
