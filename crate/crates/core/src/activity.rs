//! Accelerometer windows, per-location load ranking and k-means clustering.
//!
//! Sensors are sewn into clothing with unknown orientation, so every feature
//! is computed from the acceleration magnitude only.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::{floor, sqrt};
use thiserror::Error;

use crate::rng::SimRng;

/// Largest plausible acceleration magnitude, g.
pub const MAX_MAGNITUDE: f64 = 16.0;

/// Body locations accepted unless a caller configures its own set.
pub const DEFAULT_LOCATIONS: [&str; 6] = ["arm_l", "arm_r", "head", "leg_l", "leg_r", "trunk"];

pub const MAX_LLOYD_ITERATIONS: usize = 300;

/// Most farthest-point seedings tried per k-means call.
pub const MAX_SEEDINGS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActivityError {
    #[error("sample for sensor `{0}` is not finite or exceeds 16 g")]
    ImplausibleSample(String),
    #[error("samples for sensor `{0}` are not strictly time-ordered")]
    UnorderedStream(String),
    #[error("sensor `{0}` reports more than one body location")]
    MixedLocation(String),
    #[error("window must be positive and finite, got {0}")]
    InvalidWindow(f64),
    #[error("no points to cluster")]
    EmptyInput,
    #[error("k={k} exceeds the {distinct} distinct points")]
    KTooLarge { k: usize, distinct: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("point {0} has a different dimension")]
    DimensionMismatch(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccelSample {
    pub subject_id: String,
    pub sensor_id: String,
    pub body_location: String,
    pub t: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl AccelSample {
    pub fn new(
        subject_id: impl Into<String>,
        sensor_id: impl Into<String>,
        body_location: impl Into<String>,
        t: f64,
        ax: f64,
        ay: f64,
        az: f64,
    ) -> Result<Self, ActivityError> {
        let s = Self {
            subject_id: subject_id.into(),
            sensor_id: sensor_id.into(),
            body_location: body_location.into(),
            t,
            ax,
            ay,
            az,
        };
        let finite = [t, ax, ay, az].iter().all(|v| v.is_finite());
        if !finite || s.magnitude() > MAX_MAGNITUDE {
            return Err(ActivityError::ImplausibleSample(s.sensor_id));
        }
        Ok(s)
    }

    pub fn magnitude(&self) -> f64 {
        sqrt(self.ax * self.ax + self.ay * self.ay + self.az * self.az)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityFeatures {
    pub sensor_id: String,
    pub body_location: String,
    pub window_start_t: f64,
    pub window_end_t: f64,
    pub n: usize,
    pub mean_magnitude: f64,
    /// Population variance of the magnitude, g².
    pub variance: f64,
    /// Root mean square of successive magnitude differences over Δt, g/s.
    pub rms_jerk: f64,
}

impl ActivityFeatures {
    pub fn vector(&self) -> Vec<f64> {
        vec![self.mean_magnitude, self.variance, self.rms_jerk]
    }

    /// `variance + (rms_jerk · window)²`, in g².
    pub fn load_score(&self) -> f64 {
        let w = self.window_end_t - self.window_start_t;
        self.variance + self.rms_jerk * self.rms_jerk * w * w
    }
}

fn features_for(
    sensor: &str,
    location: &str,
    start: f64,
    end: f64,
    t: &[f64],
    mag: &[f64],
) -> ActivityFeatures {
    let n = mag.len() as f64;
    let mean = mag.iter().sum::<f64>() / n;
    let variance = mag.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / n;
    let jerk_sq: f64 = t
        .windows(2)
        .zip(mag.windows(2))
        .map(|(tw, mw)| {
            let j = (mw[1] - mw[0]) / (tw[1] - tw[0]);
            j * j
        })
        .sum();
    ActivityFeatures {
        sensor_id: String::from(sensor),
        body_location: String::from(location),
        window_start_t: start,
        window_end_t: end,
        n: mag.len(),
        mean_magnitude: mean,
        variance,
        rms_jerk: sqrt(jerk_sq / (n - 1.0)),
    }
}

/// Tumbling-window features per sensor.
///
/// Windows start at each sensor's first sample and span `window` seconds;
/// windows with fewer than two samples are dropped. Output is ordered by
/// sensor id, then window start.
pub fn window_features(
    stream: &[AccelSample],
    window: f64,
) -> Result<Vec<ActivityFeatures>, ActivityError> {
    if !(window > 0.0) || !window.is_finite() {
        return Err(ActivityError::InvalidWindow(window));
    }
    let mut by_sensor: BTreeMap<&str, Vec<&AccelSample>> = BTreeMap::new();
    for s in stream {
        by_sensor.entry(s.sensor_id.as_str()).or_default().push(s);
    }

    let mut out = Vec::new();
    for (sensor, samples) in by_sensor {
        let location = samples[0].body_location.as_str();
        if samples.iter().any(|s| s.body_location != location) {
            return Err(ActivityError::MixedLocation(String::from(sensor)));
        }
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(ActivityError::UnorderedStream(String::from(sensor)));
        }
        let origin = samples[0].t;
        let mut i = 0;
        while i < samples.len() {
            let k = floor((samples[i].t - origin) / window);
            let mut j = i + 1;
            while j < samples.len() && floor((samples[j].t - origin) / window) == k {
                j += 1;
            }
            if j - i >= 2 {
                let t: Vec<f64> = samples[i..j].iter().map(|s| s.t).collect();
                let mag: Vec<f64> = samples[i..j].iter().map(|s| s.magnitude()).collect();
                let start = origin + k * window;
                out.push(features_for(
                    sensor,
                    location,
                    start,
                    start + window,
                    &t,
                    &mag,
                ));
            }
            i = j;
        }
    }
    Ok(out)
}

/// Mean load score per body location, highest first, ties by label.
pub fn load_distribution(features: &[ActivityFeatures]) -> Vec<(String, f64)> {
    let mut acc: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for f in features {
        let e = acc.entry(f.body_location.as_str()).or_insert((0.0, 0));
        e.0 += f.load_score();
        e.1 += 1;
    }
    let mut out: Vec<(String, f64)> = acc
        .into_iter()
        .map(|(loc, (sum, n))| (String::from(loc), sum / n as f64))
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub within_ss: f64,
    pub iterations: usize,
    /// Within-cluster sum of squares after each centroid update.
    pub history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(p, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn within_ss(points: &[Vec<f64>], assignments: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum()
}

fn cluster_means(
    points: &[Vec<f64>],
    assignments: &[usize],
    k: usize,
    dim: usize,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignments) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            for v in s.iter_mut() {
                *v /= n as f64;
            }
        }
    }
    (sums, counts)
}

/// Greedy farthest-point seeding from the `first` centres: each next one is the point
/// farthest from its nearest chosen centre (lowest index on ties).
fn farthest_point_init(points: &[Vec<f64>], k: usize, first: &[usize]) -> Vec<Vec<f64>> {
    let mut centroids: Vec<Vec<f64>> = first.iter().map(|&i| points[i].clone()).collect();
    let mut dist: Vec<f64> = points
        .iter()
        .map(|p| {
            centroids
                .iter()
                .map(|c| sq_dist(p, c))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    while centroids.len() < k {
        let mut far = 0;
        for (i, &d) in dist.iter().enumerate() {
            if d > dist[far] {
                far = i;
            }
        }
        let c = points[far].clone();
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Moves single points between clusters while that lowers the within-cluster
/// sum of squares, accounting for both centroid shifts. Returns whether any
/// point moved.
fn transfer_pass(
    points: &[Vec<f64>],
    assignments: &mut [usize],
    centroids: &mut [Vec<f64>],
    counts: &mut [usize],
) -> bool {
    let mut moved = false;
    for (i, p) in points.iter().enumerate() {
        let from = assignments[i];
        let n_from = counts[from] as f64;
        if counts[from] < 2 {
            continue;
        }
        let removal = n_from / (n_from - 1.0) * sq_dist(p, &centroids[from]);
        let mut best: Option<(usize, f64)> = None;
        for (to, c) in centroids.iter().enumerate() {
            if to == from {
                continue;
            }
            let n_to = counts[to] as f64;
            let addition = n_to / (n_to + 1.0) * sq_dist(p, c);
            if addition < removal * (1.0 - 1e-12) && best.is_none_or(|(_, a)| addition < a) {
                best = Some((to, addition));
            }
        }
        if let Some((to, _)) = best {
            let n_to = counts[to] as f64;
            for (m, x) in centroids[from].iter_mut().zip(p) {
                *m = (*m * n_from - x) / (n_from - 1.0);
            }
            for (m, x) in centroids[to].iter_mut().zip(p) {
                *m = (*m * n_to + x) / (n_to + 1.0);
            }
            counts[from] -= 1;
            counts[to] += 1;
            assignments[i] = to;
            moved = true;
        }
    }
    moved
}

/// k-means with deterministic farthest-point seeding.
///
/// `seed` draws the first centre of the first seeding; further seedings
/// follow the schedule in [`seedings`] and the run with the lowest
/// within-cluster sum of squares wins (earliest on ties). In each run Lloyd iterations go until assignments are stable,
/// then single-point transfers are tried and Lloyd resumes if any point
/// moved, for at most [`MAX_LLOYD_ITERATIONS`] rounds. An emptied cluster
/// takes over the point farthest from its centroid. `history` is the
/// winning run's within-cluster sum of squares after each centroid update
/// and never increases.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansResult, ActivityError> {
    if points.is_empty() {
        return Err(ActivityError::EmptyInput);
    }
    if k == 0 {
        return Err(ActivityError::ZeroK);
    }
    let dim = points[0].len();
    if let Some(i) = points.iter().position(|p| p.len() != dim) {
        return Err(ActivityError::DimensionMismatch(i));
    }
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for p in points {
        if distinct.len() >= k {
            break;
        }
        if !distinct.contains(&p) {
            distinct.push(p);
        }
    }
    if distinct.len() < k {
        return Err(ActivityError::KTooLarge {
            k,
            distinct: distinct.len(),
        });
    }

    let mut best: Option<KMeansResult> = None;
    for start in seedings(points, k, seed) {
        let run = lloyd(points, k, dim, &start);
        if best.as_ref().is_none_or(|b| run.within_ss < b.within_ss) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one seeding"))
}

/// Starting centres for each seeding, at most [`MAX_SEEDINGS`].
///
/// The seeded draw picks point `f`. Single-centre starts come first
/// (`f`, `f+1`, … modulo n), then for k ≥ 2 every ordered pair of distinct
/// points in the same rotated order. Farthest-point seeding completes each.
fn seedings(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<usize>> {
    let n = points.len();
    let f = SimRng::new(seed).index(n);
    let rotated = |a: usize| (f + a) % n;
    let mut out: Vec<Vec<usize>> = (0..n).map(|a| vec![rotated(a)]).collect();
    if k >= 2 {
        'pairs: for a in 0..n {
            for b in 0..n {
                if out.len() >= MAX_SEEDINGS {
                    break 'pairs;
                }
                let (i, j) = (rotated(a), rotated(b));
                if points[i] != points[j] {
                    out.push(vec![i, j]);
                }
            }
        }
    }
    out.truncate(MAX_SEEDINGS);
    out
}

fn lloyd(points: &[Vec<f64>], k: usize, dim: usize, first: &[usize]) -> KMeansResult {
    let mut centroids = farthest_point_init(points, k, first);
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    let mut history = Vec::new();
    let mut iterations = 0;

    loop {
        iterations += 1;
        let (mut means, mut counts) = cluster_means(points, &assignments, k, dim);
        while let Some(empty) = counts.iter().position(|&c| c == 0) {
            let far = (0..points.len())
                .filter(|&i| counts[assignments[i]] > 1)
                .max_by(|&a, &b| {
                    let da = sq_dist(&points[a], &means[assignments[a]]);
                    let db = sq_dist(&points[b], &means[assignments[b]]);
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .expect("k <= distinct points leaves a cluster with two members");
            assignments[far] = empty;
            (means, counts) = cluster_means(points, &assignments, k, dim);
        }
        centroids = means;
        history.push(within_ss(points, &assignments, &centroids));

        if iterations >= MAX_LLOYD_ITERATIONS {
            break;
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        if next != assignments {
            assignments = next;
            continue;
        }
        let mut trial = centroids.clone();
        if !transfer_pass(points, &mut assignments, &mut trial, &mut counts) {
            break;
        }
    }

    let within_ss = *history.last().expect("at least one iteration");
    KMeansResult {
        assignments,
        centroids,
        within_ss,
        iterations,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(sensor: &str, loc: &str, mags: &[f64], dt: f64) -> Vec<AccelSample> {
        mags.iter()
            .enumerate()
            .map(|(i, &m)| AccelSample::new("s1", sensor, loc, i as f64 * dt, 0.0, 0.0, m).unwrap())
            .collect()
    }

    #[test]
    fn gravity_at_rest() {
        let f = window_features(&stream("a", "trunk", &[1.0; 10], 0.1), 0.5).unwrap();
        assert!(!f.is_empty());
        for w in &f {
            assert!((w.mean_magnitude - 1.0).abs() < 1e-15);
            assert_eq!(w.variance, 0.0);
            assert_eq!(w.rms_jerk, 0.0);
        }
    }

    #[test]
    fn alternating_magnitudes() {
        let f = window_features(&stream("a", "arm_l", &[1.0, 2.0, 1.0, 2.0], 1.0), 4.0).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].variance, 0.25);
        assert_eq!(f[0].rms_jerk, 1.0);
        assert_eq!(f[0].mean_magnitude, 1.5);
    }

    #[test]
    fn sparse_windows_dropped() {
        // one sample per window
        let f = window_features(&stream("a", "head", &[1.0, 1.0, 1.0], 10.0), 5.0).unwrap();
        assert!(f.is_empty());
    }

    #[test]
    fn unordered_rejected() {
        let mut s = stream("a", "head", &[1.0, 1.0, 1.0], 1.0);
        s.swap(0, 2);
        assert_eq!(
            window_features(&s, 5.0),
            Err(ActivityError::UnorderedStream("a".into()))
        );
    }

    #[test]
    fn implausible_sample() {
        assert!(AccelSample::new("s", "a", "head", 0.0, 10.0, 10.0, 10.0).is_err());
        assert!(AccelSample::new("s", "a", "head", 0.0, f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn moving_legs_rank_first() {
        let mut all = stream("s_leg", "leg_l", &[1.0, 1.5, 0.8, 1.7, 0.9, 1.4], 0.5);
        all.extend(stream("s_head", "head", &[1.0; 6], 0.5));
        all.extend(stream("s_arm", "arm_r", &[1.0; 6], 0.5));
        let f = window_features(&all, 10.0).unwrap();
        let load = load_distribution(&f);
        assert_eq!(load[0].0, "leg_l");
        // zero-load tie broken by label
        assert_eq!(load[1].0, "arm_r");
        assert_eq!(load[2].0, "head");
    }

    #[test]
    fn kmeans_two_pairs() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![100.0, 0.0],
            vec![100.0, 1.0],
        ];
        let r = kmeans(&pts, 2, 3).unwrap();
        assert_eq!(r.assignments[0], r.assignments[1]);
        assert_eq!(r.assignments[2], r.assignments[3]);
        assert_ne!(r.assignments[0], r.assignments[2]);
        // each pair contributes 2 · (1/2)²
        assert!((r.within_ss - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kmeans_single_cluster_is_mean() {
        let pts = vec![vec![1.0], vec![2.0], vec![6.0]];
        let r = kmeans(&pts, 1, 0).unwrap();
        assert_eq!(r.centroids, vec![vec![3.0]]);
        // population variance 14/3, times n
        assert!((r.within_ss - 14.0).abs() < 1e-12);
    }

    #[test]
    fn kmeans_errors() {
        assert_eq!(kmeans(&[], 1, 0), Err(ActivityError::EmptyInput));
        let pts = vec![vec![1.0], vec![1.0]];
        assert_eq!(
            kmeans(&pts, 2, 0),
            Err(ActivityError::KTooLarge { k: 2, distinct: 1 })
        );
        assert_eq!(kmeans(&pts, 0, 0), Err(ActivityError::ZeroK));
        assert_eq!(
            kmeans(&[vec![1.0], vec![1.0, 2.0]], 1, 0),
            Err(ActivityError::DimensionMismatch(1))
        );
    }
}
