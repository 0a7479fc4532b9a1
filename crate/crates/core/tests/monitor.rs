use pphm_core::model::{validate_series, BiomarkerSample, BiomarkerSeries};
use pphm_core::monitor::{
    classify, evaluate_alerts, fit_trend, forecast_crossing, forecast_value, replay_alerts,
    AlertKind, Limit, MonitorState, ThresholdBand, Zone,
};
use pphm_core::rng::SimRng;
use pphm_core::simgen::{gen_drift, DriftParams, SeriesLabels};
use pphm_oracles as oracle;
use proptest::prelude::*;

fn series(points: &[(f64, f64)]) -> BiomarkerSeries {
    validate_series(
        points
            .iter()
            .map(|&(t, v)| BiomarkerSample::new("p1", "glucose", t, v, "mg/dL"))
            .collect(),
    )
    .unwrap()
}

fn band(ln: Option<f64>, un: Option<f64>, lr: Option<f64>, ur: Option<f64>) -> ThresholdBand {
    ThresholdBand::new("glucose", ln, un, lr, ur, 0.95).unwrap()
}

/// Zone from the written rule, evaluated without the production ordering.
fn reference_zone(
    v: f64,
    ln: Option<f64>,
    un: Option<f64>,
    lr: Option<f64>,
    ur: Option<f64>,
) -> Zone {
    let risk = lr.is_some_and(|r| v < r) || ur.is_some_and(|r| v > r);
    let normal = ln.is_none_or(|l| l <= v) && un.is_none_or(|u| v <= u);
    match (risk, normal) {
        (true, _) => Zone::Risk,
        (false, true) => Zone::Normal,
        (false, false) => Zone::Abnormal,
    }
}

#[test]
fn zone_grid_scan() {
    let bands = [
        (Some(75.0), Some(200.0), None, None),
        (Some(75.0), Some(200.0), None, Some(250.0)),
        (Some(75.0), Some(200.0), Some(50.0), Some(250.0)),
        (None, Some(200.0), None, Some(250.0)),
        (Some(75.0), None, Some(50.0), None),
        (None, Some(200.0), None, None),
    ];
    for (ln, un, lr, ur) in bands {
        let b = band(ln, un, lr, ur);
        for i in 0..=40_000 {
            let v = i as f64 * 0.01;
            assert_eq!(
                classify(v, &b),
                reference_zone(v, ln, un, lr, ur),
                "v={v} {b:?}"
            );
        }
        for edge in [ln, un, lr, ur].into_iter().flatten() {
            for v in [edge, edge.next_down(), edge.next_up()] {
                assert_eq!(classify(v, &b), reference_zone(v, ln, un, lr, ur), "v={v}");
            }
        }
    }
}

#[test]
fn glucose_band_examples() {
    let b = band(Some(75.0), Some(200.0), None, Some(250.0));
    assert_eq!(classify(120.0, &b), Zone::Normal);
    assert_eq!(classify(75.0, &b), Zone::Normal);
    assert_eq!(classify(200.0, &b), Zone::Normal);
    assert_eq!(classify(74.999, &b), Zone::Abnormal);
    assert_eq!(classify(230.0, &b), Zone::Abnormal);
    assert_eq!(classify(250.0, &b), Zone::Abnormal);
    assert_eq!(classify(260.0, &b), Zone::Risk);
}

#[test]
fn trend_matches_uncentered_closed_form() {
    let mut rng = SimRng::new(17);
    let pts: Vec<(f64, f64)> = (0..50)
        .map(|i| {
            let t = i as f64 * 3.0;
            (t, 100.0 + 0.5 * t + rng.standard_normal())
        })
        .collect();
    let s = series(&pts);
    let trend = fit_trend(&s, 1e9).unwrap();
    let (t, y): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
    let (slope, b0) = oracle::ols_uncentered(&t, &y);
    assert!((trend.slope - slope).abs() < 1e-12);
    assert!((trend.value_at(0.0) - b0).abs() < 1e-10);
    assert_eq!(trend.n, 50);
}

#[test]
fn window_keeps_trailing_samples() {
    let pts: Vec<(f64, f64)> = (0..100)
        .map(|i| (i as f64, if i < 60 { 0.0 } else { i as f64 }))
        .collect();
    let trend = fit_trend(&series(&pts), 30.0).unwrap();
    assert_eq!(trend.n, 31);
    assert_eq!(trend.window_start_t, 69.0);
    assert!((trend.slope - 1.0).abs() < 1e-12);
    assert_eq!(trend.residual_std, 0.0);
}

#[test]
fn drift_crossing_is_exact() {
    let pts: Vec<(f64, f64)> = (0..=60)
        .map(|i| (i as f64, 100.0 + 0.5 * i as f64))
        .collect();
    let b = band(None, Some(150.0), None, None);
    let c = forecast_crossing(&series(&pts), &b, 1e9, 100.0)
        .unwrap()
        .unwrap();
    assert!((c.t_cross - 100.0).abs() < 1e-6);
    assert_eq!(c.limit, Limit::UpperNormal);
}

#[test]
fn earliest_crossing_over_all_limits() {
    let mut rng = SimRng::new(5);
    for _ in 0..500 {
        let start = rng.uniform_range(60.0, 220.0);
        let slope = rng.uniform_range(-2.0, 2.0);
        let horizon = rng.uniform_range(10.0, 300.0);
        let pts: Vec<(f64, f64)> = (0..20)
            .map(|i| (i as f64, start + slope * i as f64))
            .collect();
        let b = band(Some(75.0), Some(200.0), Some(50.0), Some(250.0));
        let got = forecast_crossing(&series(&pts), &b, 1e9, horizon).unwrap();
        let end = 19.0;
        let want = b
            .limits()
            .filter(|(l, _)| l.is_upper() == (slope > 0.0))
            .map(|(l, v)| (l, (v - start) / slope))
            .filter(|&(_, t)| t > end && t <= end + horizon)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match (got, want) {
            (None, None) => {}
            (Some(c), Some((l, t))) => {
                assert_eq!(c.limit, l);
                assert!((c.t_cross - t).abs() < 1e-6);
            }
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn forecast_at_crossing_sits_on_limit() {
    let pts: Vec<(f64, f64)> = (0..30)
        .map(|i| (i as f64 * 10.0, 180.0 - 1.3 * i as f64))
        .collect();
    let b = band(Some(75.0), Some(200.0), Some(50.0), None);
    let s = series(&pts);
    let trend = fit_trend(&s, 1e9).unwrap();
    let c = forecast_crossing(&s, &b, 1e9, 1e4).unwrap().unwrap();
    assert_eq!(c.limit, Limit::LowerNormal);
    let f = forecast_value(&trend, c.t_cross, 0.95).unwrap();
    assert!((f.value - 75.0).abs() < 1e-9);
}

#[test]
fn prediction_interval_coverage() {
    // A prediction interval covers a fresh observation at the forecast time.
    let (n, sigma, horizon) = (50, 2.0, 60.0);
    for conf in [0.8, 0.95] {
        let mut hits = 0;
        for seed in 0..1000 {
            let p = DriftParams {
                start_value: 100.0,
                slope: 0.5,
                noise_sigma: sigma,
                n,
                dt: 2.0,
            };
            let s = gen_drift(&p, seed, &SeriesLabels::new("p", "x", "u")).unwrap();
            let trend = fit_trend(&s, 1e9).unwrap();
            let t_f = s.last().t + horizon;
            let f = forecast_value(&trend, t_f, conf).unwrap();
            let mut rng = SimRng::new(1_000_000 + seed);
            let fresh = 100.0 + 0.5 * t_f + rng.normal(0.0, sigma);
            if (fresh - f.value).abs() <= f.half_width {
                hits += 1;
            }
        }
        let coverage = hits as f64 / 1000.0;
        assert!((coverage - conf).abs() <= 0.03, "conf {conf}: {coverage}");
    }
}

#[test]
fn half_width_uses_normal_quantile() {
    let mut rng = SimRng::new(3);
    let pts: Vec<(f64, f64)> = (0..40)
        .map(|i| (i as f64, 5.0 + rng.standard_normal()))
        .collect();
    let trend = fit_trend(&series(&pts), 1e9).unwrap();
    let t_f = 50.0;
    let f = forecast_value(&trend, t_f, 0.9).unwrap();
    let t: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let tm = t.iter().sum::<f64>() / 40.0;
    let sxx: f64 = t.iter().map(|x| (x - tm).powi(2)).sum();
    let want = oracle::z_critical(0.9)
        * trend.residual_std
        * (1.0 + 1.0 / 40.0 + (t_f - tm).powi(2) / sxx).sqrt();
    assert!((f.half_width - want).abs() < 1e-10);
}

#[test]
fn transition_alerts() {
    let b = band(Some(75.0), Some(200.0), None, Some(250.0));
    let s = series(&[(0.0, 120.0), (60.0, 260.0)]);
    let a = evaluate_alerts(Zone::Normal, &s, &b, 30.0, 600.0);
    assert_eq!(a.len(), 1);
    assert_eq!(a[0].kind, AlertKind::EnteredRisk);
    let flat = series(&[(0.0, 220.0), (60.0, 220.0), (120.0, 220.0)]);
    assert!(evaluate_alerts(Zone::Abnormal, &flat, &b, 300.0, 600.0).is_empty());
}

#[test]
fn evaluation_is_idempotent_with_updated_zone() {
    let b = band(Some(75.0), Some(200.0), None, Some(250.0));
    let s = series(&[(0.0, 150.0), (60.0, 230.0)]);
    let first = evaluate_alerts(Zone::Normal, &s, &b, 30.0, 600.0);
    assert_eq!(first[0].kind, AlertKind::EnteredAbnormal);
    let zone = classify(s.last().value, &b);
    let second = evaluate_alerts(zone, &s, &b, 30.0, 600.0);
    assert!(second
        .iter()
        .all(|a| a.kind == AlertKind::PredictedCrossing));
}

#[test]
fn replay_announces_steady_drift_once() {
    let pts: Vec<(f64, f64)> = (0..=60)
        .map(|i| (i as f64, 100.0 + 0.5 * i as f64))
        .collect();
    let b = band(None, Some(150.0), None, None);
    let (alerts, state) = replay_alerts(&series(&pts), &b, 1e9, 100.0, MonitorState::default());
    let crossings: Vec<_> = alerts
        .iter()
        .filter(|a| a.kind == AlertKind::PredictedCrossing)
        .collect();
    assert_eq!(crossings.len(), 1);
    assert!((crossings[0].t_predicted.unwrap() - 100.0).abs() < 1e-6);
    assert_eq!(state.announced, Some(Limit::UpperNormal));
    for a in &alerts {
        if let Some(tp) = a.t_predicted {
            assert!(tp >= a.t_issued);
        }
    }
}

proptest! {
    #[test]
    fn shifting_values_and_band_changes_nothing(
        c in -500.0f64..500.0,
        slope in -1.0f64..1.0,
        start in 60.0f64..220.0,
        seed in 0u64..100,
    ) {
        let mut rng = SimRng::new(seed);
        let pts: Vec<(f64, f64)> = (0..25)
            .map(|i| (i as f64 * 10.0, start + slope * i as f64 * 10.0 + rng.normal(0.0, 0.5)))
            .collect();
        let moved: Vec<(f64, f64)> = pts.iter().map(|&(t, v)| (t, v + c)).collect();
        let b = band(Some(75.0), Some(200.0), Some(50.0), Some(250.0));
        let bc = b.shifted(c);
        let (s, sc) = (series(&pts), series(&moved));
        for &(_, v) in &pts {
            prop_assert_eq!(classify(v, &b), classify(v + c, &bc));
        }
        let x = forecast_crossing(&s, &b, 120.0, 600.0).unwrap();
        let y = forecast_crossing(&sc, &bc, 120.0, 600.0).unwrap();
        prop_assert_eq!(x.is_some(), y.is_some());
        if let (Some(x), Some(y)) = (x, y) {
            prop_assert_eq!(x.limit, y.limit);
            prop_assert!((x.t_cross - y.t_cross).abs() < 1e-6 * (1.0 + x.t_cross.abs()));
        }
        let (ax, _) = replay_alerts(&s, &b, 120.0, 600.0, MonitorState::default());
        let (ay, _) = replay_alerts(&sc, &bc, 120.0, 600.0, MonitorState::default());
        let kinds = |a: &[pphm_core::monitor::Alert]| a.iter().map(|a| (a.kind, a.t_issued, a.limit)).collect::<Vec<_>>();
        prop_assert_eq!(kinds(&ax), kinds(&ay));
    }
}
