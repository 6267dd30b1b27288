//! Acceptance suite. Runs every criterion, prints one line each and exits
//! nonzero if any fails.

use std::fmt::Write as _;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use gnss_grnn::harness::{
    generate_synthetic, run_sweep, time_methods, EvaluationSettings, SyntheticKind,
    SyntheticParams, ValueBasis,
};
use gnss_grnn::{
    estimate_theta_values, forecast_series, mean_abs_error, predict_one, smape, std_of_errors,
    theta_backtest, theta_forecast, BandwidthRule, Component, Epoch, ForecastRecord, GrnnConfig,
    GrnnState, PredictionPairs, SmapeVariant, ThetaModel, UpdateMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<f64, String> {
    let s = start.elapsed().as_secs_f64();
    ensure(s < limit.as_secs_f64(), || {
        format!("took {s:.2} s, limit {} s", limit.as_secs())
    })?;
    Ok(s)
}

fn window(points: &[(f64, f64)]) -> GrnnState {
    GrnnState::from_observations(points.iter().map(|&(t, z)| (Epoch::new(t).unwrap(), z))).unwrap()
}

fn p1_weights() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_sum = 0.0f64;
    for case in 0..1000 {
        let n = rng.random_range(1..=60);
        let mut t = 50_000.0 + rng.random_range(0.0..1000.0);
        let level = rng.random_range(-5.0e6..5.0e6);
        let mut pts = Vec::with_capacity(n);
        for _ in 0..n {
            t += rng.random_range(0.01..5.0);
            pts.push((t, level + rng.random_range(-10.0..10.0)));
        }
        let target = Epoch::new(t + rng.random_range(0.01..10.0)).unwrap();
        let h = 10f64.powf(rng.random_range(-0.3..3.0));
        let cfg = GrnnConfig::new(n).with_bandwidth(BandwidthRule::Fixed(h));
        let pred =
            predict_one(&window(&pts), target, &cfg).map_err(|e| format!("case {case}: {e}"))?;
        let sum = pred.weights.sum();
        worst_sum = worst_sum.max((sum - 1.0).abs());
        ensure((sum - 1.0).abs() <= 1e-12, || {
            format!("case {case}: weights sum to {sum}")
        })?;
        let lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        ensure(lo <= pred.value && pred.value <= hi, || {
            format!("case {case}: {} outside [{lo}, {hi}]", pred.value)
        })?;
    }
    let s = within_time(start, Duration::from_secs(5))?;
    Ok(format!(
        "1000 cases, max |sum w - 1| = {worst_sum:.1e}, {s:.2} s"
    ))
}

/// Kernel regression written out from the definitions, normalised in log
/// space so no term underflows.
fn grnn_oracle(pts: &[(f64, f64)], target: f64, h: f64) -> f64 {
    let logk: Vec<f64> = pts
        .iter()
        .map(|&(t, _)| {
            let a = (target - t).abs() / h;
            -0.5 * a * a - 0.5 * (2.0 * std::f64::consts::PI).ln()
        })
        .collect();
    let m = logk.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let denom: f64 = logk.iter().map(|l| (l - m).exp()).sum();
    pts.iter()
        .zip(&logk)
        .map(|(&(_, z), l)| (l - m).exp() / denom * z)
        .sum()
}

fn bandwidth_oracle(rule: BandwidthRule, epochs: &[f64], target: f64) -> f64 {
    let n = epochs.len() as f64;
    let spacing = if epochs.len() == 1 {
        target - epochs[0]
    } else {
        (epochs[epochs.len() - 1] - epochs[0]) / (n - 1.0)
    };
    match rule {
        BandwidthRule::Fixed(h) => h,
        BandwidthRule::MeanSpacing => spacing,
        BandwidthRule::WindowStd => {
            let mean = epochs.iter().sum::<f64>() / n;
            let sd = (epochs.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                spacing
            }
        }
    }
}

/// The forecast formula summed literally; terms needing values past the
/// window are left out.
fn theta_oracle(y: &[f64], k: usize) -> f64 {
    let p = y.len() as f64;
    let st: f64 = y.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum();
    let s: f64 = y.iter().sum();
    let theta = 12.0 / (p * (p * p - 1.0)) * st - 6.0 / (p * (p - 1.0)) * s;
    let yy = |t: usize| y[t - 1];
    let mut curv = 0.0;
    for t in 2..=(k - 1) {
        if t + 1 > y.len() {
            break;
        }
        curv += (k - t) as f64 * (yy(t + 1) - 2.0 * yy(t) + yy(t - 1));
    }
    yy(1) + (k - 1) as f64 * (yy(2) - yy(1)) + theta * curv
}

fn p2_oracles() -> Outcome {
    let start = Instant::now();
    let grid_t = [0.0, 1.0, 2.0, 3.5, 5.0, 8.0];
    let grid_z = [-1.0, 0.0, 2.5];
    let leads = [0.5, 1.0, 3.0];
    let rules = [
        BandwidthRule::Fixed(0.3),
        BandwidthRule::Fixed(1.0),
        BandwidthRule::Fixed(2.5),
        BandwidthRule::Fixed(10.0),
        BandwidthRule::WindowStd,
        BandwidthRule::MeanSpacing,
    ];
    let mut grnn_cases = 0usize;
    let mut worst = 0.0f64;
    for mask in 1u32..(1 << grid_t.len()) {
        let epochs: Vec<f64> = (0..grid_t.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| 50_000.0 + grid_t[i])
            .collect();
        let n = epochs.len();
        for code in 0..grid_z.len().pow(n as u32) {
            let mut c = code;
            let pts: Vec<(f64, f64)> = epochs
                .iter()
                .map(|&t| {
                    let z = grid_z[c % grid_z.len()];
                    c /= grid_z.len();
                    (t, z)
                })
                .collect();
            let state = window(&pts);
            for lead in leads {
                let target = epochs[n - 1] + lead;
                for rule in rules {
                    let cfg = GrnnConfig::new(n).with_bandwidth(rule);
                    let got = predict_one(&state, Epoch::new(target).unwrap(), &cfg)
                        .map_err(|e| format!("{pts:?} -> {target}: {e}"))?;
                    let rel_epochs: Vec<f64> = epochs.iter().map(|t| t - epochs[0]).collect();
                    let h = bandwidth_oracle(rule, &rel_epochs, target - epochs[0]);
                    let want = grnn_oracle(&pts, target, h);
                    let scale = want.abs().max(2.5);
                    let err = (got.value - want).abs() / scale;
                    worst = worst.max(err);
                    ensure(err <= 1e-10, || {
                        format!("{pts:?} -> {target} ({rule:?}): {} vs {want}", got.value)
                    })?;
                    grnn_cases += 1;
                }
            }
        }
    }

    let grid_y = [-1.0, 0.0, 1.0, 2.5];
    let mut theta_cases = 0usize;
    let mut worst_theta = 0.0f64;
    for p in 3..=8usize {
        for code in 0..grid_y.len().pow(p as u32) {
            let mut c = code;
            let y: Vec<f64> = (0..p)
                .map(|_| {
                    let v = grid_y[c % grid_y.len()];
                    c /= grid_y.len();
                    v
                })
                .collect();
            let model = ThetaModel::fit(&y).map_err(|e| e.to_string())?;
            for k in 3..=p + 1 {
                let got = theta_forecast(&model, k).map_err(|e| e.to_string())?;
                let want = theta_oracle(&y, k);
                let err = (got - want).abs() / want.abs().max(1.0);
                worst_theta = worst_theta.max(err);
                ensure(err <= 1e-12, || {
                    format!("theta {y:?} k={k}: {got} vs {want}")
                })?;
                theta_cases += 1;
            }
        }
    }
    let s = within_time(start, Duration::from_secs(30))?;
    Ok(format!(
        "{grnn_cases} kernel cases (max rel {worst:.1e}), {theta_cases} theta cases (max rel {worst_theta:.1e}), {s:.2} s"
    ))
}

fn linear_series(a: f64, b: f64, n: usize) -> gnss_grnn::ComponentSeries {
    gnss_grnn::ComponentSeries::new(
        Component::X,
        (0..n)
            .map(|i| Epoch::new(55_000.0 + i as f64).unwrap())
            .collect(),
        (1..=n).map(|t| a + b * t as f64).collect(),
    )
    .unwrap()
}

fn p3_theta_exactness() -> Outcome {
    let intercepts = [-500.0, -3.7, 0.0, 12.25, 800.0];
    let (mut worst_e, mut worst_s) = (0.0f64, 0.0f64);
    for i in 0..20 {
        let mag = 10f64.powf(-2.0 + 4.0 * i as f64 / 19.0);
        let b = if i % 2 == 0 { mag } else { -mag };
        for a in intercepts {
            let s = linear_series(a, b, 40);
            let scale = s.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for r in theta_backtest(&s, 10).map_err(|e| e.to_string())? {
                let rel = r.error().abs() / scale;
                worst_e = worst_e.max(rel);
                ensure(rel <= 1e-9, || {
                    format!("a={a} b={b} k={}: error {}", r.index, r.error())
                })?;
            }
            let theta = estimate_theta_values(&s.values()[..10]).map_err(|e| e.to_string())?;
            let rel = (theta - b).abs() / b.abs();
            worst_s = worst_s.max(rel);
            ensure(rel <= 1e-10, || format!("a={a} b={b}: theta {theta}"))?;
        }
    }
    Ok(format!(
        "100 lines, max rel error {worst_e:.1e}, max rel slope error {worst_s:.1e}"
    ))
}

fn p4_sweep_direction() -> Outcome {
    let start = Instant::now();
    let station = generate_synthetic(
        SyntheticKind::TrendPlusAnnual,
        2000,
        42,
        &SyntheticParams::default(),
    )
    .map_err(|e| e.to_string())?;
    let tf = [UpdateMode::TeacherForced];
    let sweep = |rule: BandwidthRule| {
        run_sweep(
            &station,
            1..=100,
            &GrnnConfig::new(1).with_bandwidth(rule),
            &tf,
            ValueBasis::Raw,
            SmapeVariant::PerTerm,
        )
        .map_err(|e| e.to_string())
    };
    let main = sweep(BandwidthRule::MeanSpacing)?;
    let mut detail = String::new();
    for c in Component::ALL {
        let lo = main.row(1, c, UpdateMode::TeacherForced).unwrap();
        let hi = main.row(100, c, UpdateMode::TeacherForced).unwrap();
        ensure(
            hi.smape_percent < lo.smape_percent && hi.std_m < lo.std_m && hi.mabs_m < lo.mabs_m,
            || format!("{c}: v=1 {lo:?} vs v=100 {hi:?}"),
        )?;
        let _ = write!(
            detail,
            " {c}: StD {:.3e}->{:.3e} m, MAbs {:.3e}->{:.3e} m;",
            lo.std_m, hi.std_m, lo.mabs_m, hi.mabs_m
        );
    }
    let info = sweep(BandwidthRule::WindowStd)?;
    let x1 = info
        .row(1, Component::X, UpdateMode::TeacherForced)
        .unwrap();
    let x100 = info
        .row(100, Component::X, UpdateMode::TeacherForced)
        .unwrap();
    let s = within_time(start, Duration::from_secs(60))?;
    Ok(format!(
        "mean-spacing bandwidth:{detail} [window-std X StD {:.3e}->{:.3e} m, not asserted] {s:.2} s",
        x1.std_m, x100.std_m
    ))
}

fn smape_of(
    records: &[ForecastRecord],
    keep: impl Fn(&ForecastRecord) -> bool,
) -> Result<f64, String> {
    let pairs = PredictionPairs::from_pairs(
        records
            .iter()
            .filter(|r| keep(r))
            .map(|r| (r.predicted, r.observed)),
    )
    .map_err(|e| e.to_string())?;
    smape(&pairs).map_err(|e| e.to_string())
}

fn p5_gap_penalty() -> Outcome {
    let params = SyntheticParams {
        gaps: vec![(300, 30), (700, 25), (1100, 30), (1500, 20)],
        ..Default::default()
    };
    let full = generate_synthetic(SyntheticKind::TrendPlusAnnual, 2000, 42, &params)
        .map_err(|e| e.to_string())?;
    let gapped = generate_synthetic(SyntheticKind::GappedTrend, 2000, 42, &params)
        .map_err(|e| e.to_string())?;
    let cfg = GrnnConfig::default().with_mode(UpdateMode::TeacherForced);
    let mut detail = String::new();
    for c in Component::ALL {
        let g = forecast_series(gapped.component(c), &cfg).map_err(|e| e.to_string())?;
        let u = forecast_series(full.component(c), &cfg).map_err(|e| e.to_string())?;
        let shared: std::collections::HashSet<u64> =
            g.iter().map(|r| r.epoch.mjd().to_bits()).collect();
        let sg = smape_of(&g, |_| true)?;
        let su = smape_of(&u, |r| shared.contains(&r.epoch.mjd().to_bits()))?;
        ensure(sg >= su, || format!("{c}: gapped {sg:e} < ungapped {su:e}"))?;
        let _ = write!(detail, " {c} ratio {:.3};", sg / su);
    }
    Ok(format!(
        "sMAPE gapped/ungapped on shared targets:{detail} reference ratio 10, not asserted"
    ))
}

fn p6_timing() -> Outcome {
    let station = generate_synthetic(
        SyntheticKind::TrendPlusAnnual,
        2100,
        6,
        &SyntheticParams::default(),
    )
    .map_err(|e| e.to_string())?;
    let settings = EvaluationSettings {
        grnn: GrnnConfig::new(100),
        theta_window: 100,
        ..Default::default()
    };
    let t = time_methods(&[station], &settings, 5).map_err(|e| e.to_string())?;
    ensure(t.predictions >= 2000, || {
        format!("only {} predictions", t.predictions)
    })?;
    ensure(t.grnn_median_s < t.theta_median_s, || {
        format!(
            "GRNN {:.4} s vs Theta {:.4} s",
            t.grnn_median_s, t.theta_median_s
        )
    })?;
    Ok(format!(
        "{} predictions x {} reps: GRNN {:.4} s, Theta {:.4} s, ratio {:.3} (reference 0.219)",
        t.predictions,
        t.repetitions,
        t.grnn_median_s,
        t.theta_median_s,
        t.grnn_median_s / t.theta_median_s
    ))
}

fn p7_metrics() -> Outcome {
    let pairs = |p: &[(f64, f64)]| PredictionPairs::from_pairs(p.iter().copied()).unwrap();
    let residuals = |r: &[f64]| pairs(&r.iter().map(|&e| (0.0, e)).collect::<Vec<_>>());
    // (name, computed, oracle, ulps allowed); 50/3 has no exact double
    let checks: [(&str, f64, f64, u64); 5] = [
        (
            "sMAPE (3,1)",
            smape(&pairs(&[(3.0, 1.0)])).unwrap(),
            50.0,
            0,
        ),
        (
            "sMAPE (1,1),(0.5,1)",
            smape(&pairs(&[(1.0, 1.0), (0.5, 1.0)])).unwrap(),
            50.0 / 3.0,
            2,
        ),
        (
            "StD [-1,1]",
            std_of_errors(&residuals(&[-1.0, 1.0])).unwrap(),
            2f64.sqrt(),
            0,
        ),
        (
            "StD [0,0,3]",
            std_of_errors(&residuals(&[0.0, 0.0, 3.0])).unwrap(),
            3f64.sqrt(),
            0,
        ),
        (
            "MAbs [-1,1]",
            mean_abs_error(&residuals(&[-1.0, 1.0])),
            1.0,
            0,
        ),
    ];
    for (name, got, want, ulps) in checks {
        let apart = got.to_bits().abs_diff(want.to_bits());
        ensure(got.signum() == want.signum() && apart <= ulps, || {
            format!("{name}: {got} vs {want} ({apart} ulp apart, {ulps} allowed)")
        })?;
    }
    Ok("5 hand-computed examples: 4 bit-exact, 50/3 within 2 ulp".into())
}

fn cli(args: &[&str]) -> Result<std::process::Output, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_gnss-grnn"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "gnss-grnn {args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out)
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("temp paths are UTF-8")
}

fn p8_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("synt.csv");
    cli(&[
        "synth",
        "--length",
        "400",
        "--seed",
        "11",
        "--out",
        path_str(&input),
    ])?;
    let mut reports = Vec::new();
    for (i, jobs) in ["2", "2", "1"].iter().enumerate() {
        let out = dir.path().join(format!("r{i}.json"));
        cli(&[
            "--jobs",
            jobs,
            "compare",
            "-v",
            "50",
            path_str(&input),
            "--out",
            path_str(&out),
        ])?;
        reports.push(fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure(reports[0] == reports[1], || {
        "two identical runs differ".into()
    })?;
    ensure(reports[0] == reports[2], || {
        "output depends on --jobs".into()
    })?;
    Ok(format!(
        "{} bytes, identical across repeated runs and thread counts",
        reports[0].len()
    ))
}

/// A file in the input format with decimal-year epochs, one hole and the
/// metadata comments a real station file would carry.
fn stand_in_station(dir: &Path) -> Result<PathBuf, String> {
    let params = SyntheticParams {
        station_id: "BADH".into(),
        gaps: vec![(400, 12)],
        ..Default::default()
    };
    let s = generate_synthetic(SyntheticKind::GappedTrend, 1100, 3, &params)
        .map_err(|e| e.to_string())?;
    let mut text = String::from("# station: BADH\n# country: Germany\nepoch_year,x_m,y_m,z_m\n");
    for (i, e) in s.epochs().iter().enumerate() {
        let v: Vec<f64> = Component::ALL
            .iter()
            .map(|&c| s.component(c).values()[i])
            .collect();
        let _ = writeln!(text, "{},{},{},{}", e.decimal_year(), v[0], v[1], v[2]);
    }
    let path = dir.join("badh.csv");
    fs::write(&path, text).map_err(|e| e.to_string())?;
    Ok(path)
}

fn p9_station_report() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (paths, source) = match std::env::var_os("GNSS_GRNN_STATION_FILES") {
        Some(v) => (
            std::env::split_paths(&v).collect::<Vec<_>>(),
            "user-supplied series",
        ),
        None => (
            vec![stand_in_station(dir.path())?],
            "stand-in series; set GNSS_GRNN_STATION_FILES for real data",
        ),
    };
    let csv_out = dir.path().join("stations.csv");
    let mut args = vec!["compare".to_string()];
    args.extend(paths.iter().map(|p| p.display().to_string()));
    args.extend([
        "--csv".into(),
        csv_out.display().to_string(),
        "--out".into(),
        dir.path().join("r.json").display().to_string(),
    ]);
    cli(&args.iter().map(String::as_str).collect::<Vec<_>>())?;
    let text = fs::read_to_string(&csv_out).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    ensure(
        header == "station,country,time_span,state,method,component,smape_percent,std_m,mabs_m,n",
        || format!("header {header}"),
    )?;
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    ensure(rows.len() == 6 * paths.len(), || {
        format!("{} rows for {} stations", rows.len(), paths.len())
    })?;
    for r in &rows {
        ensure(r.len() == 10, || format!("row {r:?}"))?;
        ensure(matches!(r[3], "continuous" | "discontinuous"), || {
            format!("state {}", r[3])
        })?;
        ensure(r[2].len() == 9 && r[2].as_bytes()[4] == b'-', || {
            format!("time span {}", r[2])
        })?;
        for f in &r[6..9] {
            let v: f64 = f.parse().map_err(|_| format!("number {f}"))?;
            ensure(v.is_finite() && v >= 0.0, || format!("criterion {v}"))?;
        }
    }
    let first = &rows[0];
    Ok(format!(
        "{} station(s), {} rows ({source}); e.g. {} {} {} {}",
        paths.len(),
        rows.len(),
        first[0],
        first[2],
        first[3],
        first[1]
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("P1", "weight correctness", p1_weights),
        ("P2", "oracle equivalence", p2_oracles),
        ("P3", "theta exactness", p3_theta_exactness),
        ("P4", "sweep direction", p4_sweep_direction),
        ("P5", "gap penalty direction", p5_gap_penalty),
        ("P6", "timing direction", p6_timing),
        ("P7", "metric examples", p7_metrics),
        ("P8", "end-to-end determinism", p8_determinism),
        ("P9", "station report shape", p9_station_report),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(format!(
                "panicked: {:?}",
                p.downcast_ref::<String>()
                    .map(String::as_str)
                    .or(p.downcast_ref::<&str>().copied())
            ))
        });
        match outcome {
            Ok(detail) => println!("{id} PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("{id} FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
