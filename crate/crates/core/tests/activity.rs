use pphm_core::activity::{kmeans, load_distribution, window_features, AccelSample, ActivityError};
use pphm_core::rng::SimRng;
use pphm_core::simgen::{gen_accel, AccelParams, LocationProfile};
use pphm_oracles as oracle;
use proptest::prelude::*;

fn random_points(rng: &mut SimRng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.uniform_range(-5.0, 5.0)).collect())
        .collect()
}

#[test]
fn two_means_reach_exhaustive_minimum() {
    let mut rng = SimRng::new(8);
    for inst in 0..30 {
        let n = 3 + rng.index(6);
        let dim = 1 + rng.index(3);
        let pts = random_points(&mut rng, n, dim);
        let res = kmeans(&pts, 2, inst).unwrap();
        let best = oracle::best_two_partition(&pts);
        assert!(
            (res.within_ss - best).abs() <= 1e-9 * (1.0 + best),
            "instance {inst}: {} vs {best}",
            res.within_ss
        );
    }
}

#[test]
fn history_never_increases() {
    let mut rng = SimRng::new(21);
    for seed in 0..50 {
        let n = 5 + rng.index(60);
        let pts = random_points(&mut rng, n, 3);
        let k = 1 + rng.index(4);
        let res = kmeans(&pts, k, seed).unwrap();
        assert!(!res.history.is_empty());
        for w in res.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs(), "{:?}", res.history);
        }
        assert_eq!(*res.history.last().unwrap(), res.within_ss);
    }
}

#[test]
fn clustering_is_deterministic_per_seed() {
    let mut rng = SimRng::new(2);
    let pts = random_points(&mut rng, 40, 3);
    assert_eq!(kmeans(&pts, 3, 77).unwrap(), kmeans(&pts, 3, 77).unwrap());
}

#[test]
fn within_ss_matches_assignments() {
    let mut rng = SimRng::new(4);
    let pts = random_points(&mut rng, 30, 2);
    let res = kmeans(&pts, 3, 1).unwrap();
    let mut total = 0.0;
    for c in 0..3 {
        let members: Vec<&Vec<f64>> = pts
            .iter()
            .zip(&res.assignments)
            .filter(|(_, &a)| a == c)
            .map(|(p, _)| p)
            .collect();
        assert!(!members.is_empty());
        for d in 0..2 {
            let m = members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64;
            assert!((res.centroids[c][d] - m).abs() < 1e-12);
            total += members.iter().map(|p| (p[d] - m).powi(2)).sum::<f64>();
        }
    }
    assert!((total - res.within_ss).abs() < 1e-9);
}

#[test]
fn kmeans_errors() {
    assert_eq!(kmeans(&[], 1, 0), Err(ActivityError::EmptyInput));
    let pts = vec![vec![1.0], vec![1.0], vec![2.0]];
    assert_eq!(kmeans(&pts, 0, 0), Err(ActivityError::ZeroK));
    assert_eq!(
        kmeans(&pts, 3, 0),
        Err(ActivityError::KTooLarge { k: 3, distinct: 2 })
    );
}

fn stream(seed: u64, n: usize) -> Vec<AccelSample> {
    let mut rng = SimRng::new(seed);
    let mut out = Vec::new();
    let mut t = 0.0;
    for _ in 0..n {
        t += rng.uniform_range(0.01, 0.05);
        let v: [f64; 3] = core::array::from_fn(|_| rng.normal(0.0, 1.0));
        out.push(AccelSample::new("p", "s1", "trunk", t, v[0], v[1], v[2]).unwrap());
    }
    out
}

#[test]
fn window_variance_matches_exact() {
    let s = stream(12, 400);
    let feats = window_features(&s, 1.0).unwrap();
    assert!(feats.len() >= 4);
    for f in &feats {
        let mags: Vec<f64> = s
            .iter()
            .filter(|x| {
                let k = ((x.t - s[0].t) / 1.0).floor();
                s[0].t + k == f.window_start_t
            })
            .map(|x| x.magnitude())
            .collect();
        assert_eq!(mags.len(), f.n);
        let exact = oracle::exact_population_variance(&mags);
        assert!((f.variance - exact).abs() < 1e-10);
    }
}

#[test]
fn load_distribution_recomputes_from_features() {
    let prof = |loc: &str, amp: f64| LocationProfile {
        location: loc.into(),
        amplitude: amp,
        frequency: 1.5,
        noise_sigma: 0.02,
    };
    let p = AccelParams {
        profiles: vec![prof("leg_l", 0.8), prof("trunk", 0.4), prof("head", 0.1)],
        n: 600,
        dt: 0.02,
    };
    let s = gen_accel(&p, 3, "p").unwrap();
    let feats = window_features(&s, 2.0).unwrap();
    let dist = load_distribution(&feats);
    let order: Vec<&str> = dist.iter().map(|(l, _)| l.as_str()).collect();
    assert_eq!(order, ["leg_l", "trunk", "head"]);
    for (loc, score) in &dist {
        let own: Vec<f64> = feats
            .iter()
            .filter(|f| &f.body_location == loc)
            .map(|f| {
                let w = f.window_end_t - f.window_start_t;
                f.variance + (f.rms_jerk * w).powi(2)
            })
            .collect();
        let mean = own.iter().sum::<f64>() / own.len() as f64;
        assert!((mean - score).abs() < 1e-12 * (1.0 + mean));
    }
}

#[test]
fn stream_errors() {
    let mut s = stream(1, 10);
    s.swap(3, 4);
    assert!(matches!(
        window_features(&s, 1.0),
        Err(ActivityError::UnorderedStream(_))
    ));
    assert!(matches!(
        window_features(&stream(1, 10), 0.0),
        Err(ActivityError::InvalidWindow(_))
    ));
    assert!(AccelSample::new("p", "s", "arm_l", 0.0, 20.0, 0.0, 0.0).is_err());
}

fn rotate(s: &AccelSample, yaw: f64, pitch: f64) -> AccelSample {
    let (cy, sy, cp, sp) = (yaw.cos(), yaw.sin(), pitch.cos(), pitch.sin());
    let x1 = cy * s.ax - sy * s.ay;
    let y1 = sy * s.ax + cy * s.ay;
    let z1 = s.az;
    let x2 = cp * x1 + sp * z1;
    let z2 = -sp * x1 + cp * z1;
    AccelSample {
        ax: x2,
        ay: y1,
        az: z2,
        ..s.clone()
    }
}

proptest! {
    #[test]
    fn features_ignore_sensor_orientation(
        seed in 0u64..500,
        yaw in -3.2f64..3.2,
        pitch in -3.2f64..3.2,
    ) {
        let s = stream(seed, 120);
        let r: Vec<AccelSample> = s.iter().map(|x| rotate(x, yaw, pitch)).collect();
        let a = window_features(&s, 0.7).unwrap();
        let b = window_features(&r, 0.7).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            for (u, v) in x.vector().iter().zip(y.vector()) {
                prop_assert!((u - v).abs() < 1e-9, "{} vs {}", u, v);
            }
        }
    }

    #[test]
    fn more_clusters_never_hurt(seed in 0u64..200) {
        let mut rng = SimRng::new(seed);
        let pts = random_points(&mut rng, 12, 2);
        let two = kmeans(&pts, 2, seed).unwrap();
        let one = kmeans(&pts, 1, seed).unwrap();
        prop_assert!(two.within_ss <= one.within_ss + 1e-12);
    }
}
