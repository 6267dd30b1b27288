use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gnss_grnn::{
    forecast_series, predict_one, theta_backtest, BandwidthRule, Component, GrnnConfig, GrnnState,
    UpdateMode,
};
use gnss_grnn_bench::{daily_station, gapped_station};
use std::hint::black_box;

fn bench_predict_one(c: &mut Criterion) {
    let station = daily_station(400);
    let x = station.component(Component::X);
    let mut group = c.benchmark_group("predict_one");
    for v in [10usize, 100, 300] {
        let state = GrnnState::from_observations(x.iter().take(v)).unwrap();
        let target = x.epochs()[v];
        let cfg = GrnnConfig::new(v);
        group.bench_with_input(BenchmarkId::from_parameter(v), &v, |b, _| {
            b.iter(|| predict_one(black_box(&state), black_box(target), &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_backtests(c: &mut Criterion) {
    let daily = daily_station(2100);
    let gapped = gapped_station(2100);
    let mut group = c.benchmark_group("backtest_v100");
    for (name, station) in [("daily", &daily), ("gapped", &gapped)] {
        let x = station.component(Component::X);
        let rec = GrnnConfig::new(100);
        let tf = GrnnConfig::new(100)
            .with_mode(UpdateMode::TeacherForced)
            .with_bandwidth(BandwidthRule::Fixed(3.0));
        group.bench_function(format!("grnn_recursive/{name}"), |b| {
            b.iter(|| forecast_series(black_box(x), &rec).unwrap())
        });
        group.bench_function(format!("grnn_teacher_forced/{name}"), |b| {
            b.iter(|| forecast_series(black_box(x), &tf).unwrap())
        });
        group.bench_function(format!("theta/{name}"), |b| {
            b.iter(|| theta_backtest(black_box(x), 100).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_predict_one, bench_backtests);
criterion_main!(benches);
