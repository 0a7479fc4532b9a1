//! JSON shapes written by the commands.
//!
//! Floats are written by `serde_json`, whose shortest round-trip formatting
//! parses back to the identical `f64`.

use serde::{Deserialize, Serialize};

use pphm_core::activity::{ActivityFeatures, KMeansResult};
use pphm_core::monitor::{Alert, ChannelSummary, Crossing, TrendModel};
use pphm_core::predictor::PredictorReport;
use pphm_core::recovery::FitResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub kind: String,
    pub n: usize,
    pub seed: u64,
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub subject_id: String,
    pub channel: String,
    pub n: usize,
    pub a: f64,
    pub d: f64,
    pub theta: f64,
    pub hrrt: f64,
    pub hrrt_fraction: f64,
    pub rss: f64,
    pub residual_std: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FitReport {
    pub fn new(
        subject_id: &str,
        channel: &str,
        n: usize,
        fit: &FitResult,
        hrrt: f64,
        p: f64,
    ) -> Self {
        Self {
            subject_id: subject_id.into(),
            channel: channel.into(),
            n,
            a: fit.model.a(),
            d: fit.model.d(),
            theta: fit.model.theta(),
            hrrt,
            hrrt_fraction: p,
            rss: fit.rss,
            residual_std: fit.residual_std,
            iterations: fit.iterations,
            converged: fit.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertRecord {
    pub subject_id: String,
    pub channel: String,
    pub kind: String,
    pub t_issued: f64,
    pub t_predicted: Option<f64>,
    pub limit: Option<String>,
    pub detail: String,
}

impl From<&Alert> for AlertRecord {
    fn from(a: &Alert) -> Self {
        Self {
            subject_id: a.subject_id.clone(),
            channel: a.channel.clone(),
            kind: a.kind.as_str().into(),
            t_issued: a.t_issued,
            t_predicted: a.t_predicted,
            limit: a.limit.map(|l| l.as_str().into()),
            detail: a.detail.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRecord {
    pub slope: f64,
    pub intercept: f64,
    pub residual_std: f64,
    pub n: usize,
    pub window_start_t: f64,
    pub window_end_t: f64,
}

impl From<&TrendModel> for TrendRecord {
    fn from(t: &TrendModel) -> Self {
        Self {
            slope: t.slope,
            intercept: t.intercept,
            residual_std: t.residual_std,
            n: t.n,
            window_start_t: t.window_start_t,
            window_end_t: t.window_end_t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub t_cross: f64,
    pub limit: String,
    pub limit_value: f64,
    pub direction: String,
}

impl From<&Crossing> for CrossingRecord {
    fn from(c: &Crossing) -> Self {
        Self {
            t_cross: c.t_cross,
            limit: c.limit.as_str().into(),
            limit_value: c.limit_value,
            direction: c.direction.as_str().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub subject_id: String,
    pub channel: String,
    pub latest_t: f64,
    pub latest_value: f64,
    pub zone: String,
    pub trend: Option<TrendRecord>,
    pub crossing: Option<CrossingRecord>,
    pub alerts: usize,
    pub text: String,
}

impl ChannelRecord {
    pub fn new(s: &ChannelSummary, alerts: usize) -> Self {
        Self {
            subject_id: s.subject_id.clone(),
            channel: s.channel.clone(),
            latest_t: s.latest_t,
            latest_value: s.latest_value,
            zone: s.zone.as_str().into(),
            trend: s.trend.as_ref().map(TrendRecord::from),
            crossing: s.crossing.as_ref().map(CrossingRecord::from),
            alerts,
            text: s.text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorSummary {
    pub window: f64,
    pub horizon: f64,
    pub channels: Vec<ChannelRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub term: String,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificantPair {
    pub a: String,
    pub b: String,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRecord {
    pub names: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    pub alpha: f64,
    pub t_critical: f64,
    pub significant: Vec<SignificantPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorsReport {
    pub target: String,
    pub n_obs: usize,
    pub coefficients: Vec<Term>,
    pub intercept: f64,
    pub r_squared: f64,
    pub ranking: Vec<String>,
    pub predictors: Vec<Term>,
    pub min_abs: f64,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub correlation: Option<CorrelationRecord>,
}

impl PredictorsReport {
    pub fn new(
        target: &str,
        r: &PredictorReport,
        predictors: Vec<(String, f64)>,
        min_abs: f64,
    ) -> Self {
        Self {
            target: target.into(),
            n_obs: r.n_obs,
            coefficients: r
                .terms
                .iter()
                .zip(&r.coefficients_standardized)
                .map(|(t, &b)| Term { term: t.clone(), b })
                .collect(),
            intercept: r.intercept,
            r_squared: r.r_squared,
            ranking: r.ranking.clone(),
            predictors: predictors
                .into_iter()
                .map(|(term, b)| Term { term, b })
                .collect(),
            min_abs,
            means: r.means.clone(),
            stds: r.stds.clone(),
            correlation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadEntry {
    pub body_location: String,
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub k: usize,
    pub seed: u64,
    pub within_ss: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
    pub centroids: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
}

impl ClusterRecord {
    pub fn new(k: usize, seed: u64, r: &KMeansResult) -> Self {
        let mut sizes = vec![0; k];
        for &a in &r.assignments {
            sizes[a] += 1;
        }
        Self {
            k,
            seed,
            within_ss: r.within_ss,
            iterations: r.iterations,
            history: r.history.clone(),
            centroids: r.centroids.clone(),
            sizes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityReport {
    pub window: f64,
    pub n_windows: usize,
    pub load_ranking: Vec<LoadEntry>,
    pub clusters: Option<ClusterRecord>,
}

/// One row of the per-window CSV written by `activity --out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub sensor_id: String,
    pub body_location: String,
    pub window_start_t: f64,
    pub window_end_t: f64,
    pub n: usize,
    pub mean_magnitude: f64,
    pub variance: f64,
    pub rms_jerk: f64,
    pub load: f64,
    pub cluster: Option<usize>,
}

impl WindowRow {
    pub fn new(f: &ActivityFeatures, cluster: Option<usize>) -> Self {
        Self {
            sensor_id: f.sensor_id.clone(),
            body_location: f.body_location.clone(),
            window_start_t: f.window_start_t,
            window_end_t: f.window_end_t,
            n: f.n,
            mean_magnitude: f.mean_magnitude,
            variance: f.variance,
            rms_jerk: f.rms_jerk,
            load: f.load_score(),
            cluster,
        }
    }
}
