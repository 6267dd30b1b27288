//! Shared workloads for the criterion benches.

use gnss_grnn::harness::{generate_synthetic, SyntheticKind, SyntheticParams};
use gnss_grnn::StationSeries;

/// A 2,100-day trend-plus-annual station, the size used for timing checks.
pub fn daily_station(days: usize) -> StationSeries {
    generate_synthetic(
        SyntheticKind::TrendPlusAnnual,
        days,
        2020,
        &SyntheticParams::default(),
    )
    .expect("valid synthetic parameters")
}

/// The same station with three holes cut out.
pub fn gapped_station(days: usize) -> StationSeries {
    let params = SyntheticParams {
        gaps: vec![(days / 4, 12), (days / 2, 30), (3 * days / 4, 5)],
        ..Default::default()
    };
    generate_synthetic(SyntheticKind::GappedTrend, days, 2020, &params)
        .expect("valid synthetic parameters")
}
