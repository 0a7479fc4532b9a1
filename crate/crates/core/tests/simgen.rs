use pphm_core::recovery::{eval_recovery, RecoveryModel};
use pphm_core::simgen::{
    gen_drift, gen_panel, gen_recovery, generate, AccelParams, Dataset, DriftParams,
    LocationProfile, PanelParams, RecoveryParams, SeriesLabels, SimKind, SimSpec,
};
use pphm_oracles as oracle;

fn recovery_params(sigma: f64) -> RecoveryParams {
    RecoveryParams {
        a: 65.0,
        d: 170.0,
        theta: 0.04,
        noise_sigma: sigma,
        n: 2000,
        dt: 1.0,
    }
}

#[test]
fn same_seed_same_data() {
    let spec = SimSpec {
        kind: SimKind::Recovery(recovery_params(2.0)),
        seed: 42,
    };
    let labels = SeriesLabels::heart_rate();
    assert_eq!(
        generate(&spec, &labels).unwrap(),
        generate(&spec, &labels).unwrap()
    );
    let other = SimSpec {
        seed: 43,
        ..spec.clone()
    };
    assert_ne!(
        generate(&spec, &labels).unwrap(),
        generate(&other, &labels).unwrap()
    );
}

#[test]
fn recovery_noise_averages_out() {
    let p = recovery_params(2.0);
    let s = gen_recovery(&p, 6, &SeriesLabels::heart_rate()).unwrap();
    let m = RecoveryModel::new(p.a, p.d, p.theta).unwrap();
    let resid: Vec<f64> = s
        .samples()
        .iter()
        .map(|x| x.value - eval_recovery(&m, x.t).unwrap())
        .collect();
    let (mean, std) = oracle::mean_std(&resid);
    assert!(mean.abs() < 4.0 * 2.0 / (p.n as f64).sqrt(), "{mean}");
    assert!((std - 2.0).abs() < 0.15, "{std}");
}

#[test]
fn drift_slope_errors_follow_sampling_distribution() {
    let p = DriftParams {
        start_value: 100.0,
        slope: 0.5,
        noise_sigma: 1.0,
        n: 100,
        dt: 1.0,
    };
    let n = p.n as f64;
    let sd = p.noise_sigma / (n * (n * n - 1.0) / 12.0).sqrt();
    let z: Vec<f64> = (0..500)
        .map(|seed| {
            let s = gen_drift(&p, seed, &SeriesLabels::new("p", "x", "u")).unwrap();
            (oracle::ols_uncentered(&s.times(), &s.values()).0 - p.slope) / sd
        })
        .collect();
    let (mean, std) = oracle::mean_std(&z);
    assert!(mean.abs() < 3.0 / 500f64.sqrt(), "{mean}");
    assert!((std - 1.0).abs() < 0.1, "{std}");
    let outside = z.iter().filter(|z| z.abs() > 3.0).count();
    assert!(outside <= 5, "{outside}");
}

#[test]
fn panel_columns_are_standardized() {
    let m = gen_panel(
        &PanelParams {
            true_coefficients: vec![2.0, 0.0, -1.5],
            m: 50,
            noise_sigma: 0.0,
        },
        1,
    )
    .unwrap();
    for c in 0..3 {
        let (mean, std) = oracle::mean_std(&m.column(c));
        assert!(mean.abs() < 1e-12 && (std - 1.0).abs() < 1e-12);
    }
    for r in 0..50 {
        let row = m.row(r);
        assert!((m.target()[r] - (2.0 * row[0] - 1.5 * row[2])).abs() < 1e-12);
    }
}

#[test]
fn accel_amplitude_orders_variance() {
    let prof = |loc: &str, amp: f64| LocationProfile {
        location: loc.into(),
        amplitude: amp,
        frequency: 1.0,
        noise_sigma: 0.0,
    };
    let spec = SimSpec {
        kind: SimKind::Accel(AccelParams {
            profiles: vec![prof("arm_l", 0.2), prof("leg_r", 0.4)],
            n: 1000,
            dt: 0.01,
        }),
        seed: 0,
    };
    let Dataset::Accel(samples) = generate(&spec, &SeriesLabels::heart_rate()).unwrap() else {
        panic!("expected accel data");
    };
    let mags = |sensor: &str| -> Vec<f64> {
        samples
            .iter()
            .filter(|s| s.sensor_id == sensor)
            .map(|s| s.magnitude())
            .collect()
    };
    let (_, sa) = oracle::mean_std(&mags("s_arm_l"));
    let (_, sl) = oracle::mean_std(&mags("s_leg_r"));
    assert!((sl / sa - 2.0).abs() < 1e-6, "{}", sl / sa);
}

#[test]
fn invalid_parameters_name_the_field() {
    let mut p = recovery_params(1.0);
    p.theta = -0.1;
    assert_eq!(
        gen_recovery(&p, 0, &SeriesLabels::heart_rate())
            .unwrap_err()
            .param,
        "theta"
    );
    let e = gen_panel(
        &PanelParams {
            true_coefficients: vec![1.0; 5],
            m: 5,
            noise_sigma: 1.0,
        },
        0,
    )
    .unwrap_err();
    assert_eq!(e.param, "m");
    let mut d = DriftParams {
        start_value: 0.0,
        slope: 1.0,
        noise_sigma: 1.0,
        n: 10,
        dt: 1.0,
    };
    d.noise_sigma = -1.0;
    assert_eq!(
        gen_drift(&d, 0, &SeriesLabels::heart_rate())
            .unwrap_err()
            .param,
        "sigma"
    );
}
