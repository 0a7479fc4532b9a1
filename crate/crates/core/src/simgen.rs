//! Seeded synthetic datasets for tests and demos.
//!
//! Every generator is a pure function of its parameters and seed; see
//! [`crate::rng`] for the stream definition.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use libm::{sin, sqrt};
use thiserror::Error;

use crate::activity::AccelSample;
use crate::model::{validate_series, BiomarkerSample, BiomarkerSeries};
use crate::predictor::FactorMatrix;
use crate::recovery::{eval_recovery, RecoveryModel, RESTING_RANGE};
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid `{param}`: {reason}")]
pub struct InvalidParams {
    pub param: &'static str,
    pub reason: String,
}

fn invalid(param: &'static str, reason: impl Into<String>) -> InvalidParams {
    InvalidParams {
        param,
        reason: reason.into(),
    }
}

fn check(cond: bool, param: &'static str, reason: &str) -> Result<(), InvalidParams> {
    if cond {
        Ok(())
    } else {
        Err(invalid(param, reason))
    }
}

/// Labels written into generated biomarker samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesLabels {
    pub subject_id: String,
    pub channel: String,
    pub unit: String,
}

impl SeriesLabels {
    pub fn new(subject_id: &str, channel: &str, unit: &str) -> Self {
        Self {
            subject_id: subject_id.into(),
            channel: channel.into(),
            unit: unit.into(),
        }
    }

    pub fn heart_rate() -> Self {
        Self::new("sim", "heart_rate", "bpm")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryParams {
    pub a: f64,
    pub d: f64,
    pub theta: f64,
    pub noise_sigma: f64,
    pub n: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftParams {
    pub start_value: f64,
    pub slope: f64,
    pub noise_sigma: f64,
    pub n: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelParams {
    pub true_coefficients: Vec<f64>,
    pub m: usize,
    pub noise_sigma: f64,
}

/// Magnitude profile `1 + amplitude·sin(2π·frequency·t) + noise` for one
/// body location.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationProfile {
    pub location: String,
    pub amplitude: f64,
    pub frequency: f64,
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccelParams {
    pub profiles: Vec<LocationProfile>,
    pub n: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimKind {
    Recovery(RecoveryParams),
    Drift(DriftParams),
    Panel(PanelParams),
    Accel(AccelParams),
}

impl SimKind {
    pub fn name(&self) -> &'static str {
        match self {
            SimKind::Recovery(_) => "recovery",
            SimKind::Drift(_) => "drift",
            SimKind::Panel(_) => "panel",
            SimKind::Accel(_) => "accel",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub kind: SimKind,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Series(BiomarkerSeries),
    Panel(FactorMatrix),
    Accel(Vec<AccelSample>),
}

impl Dataset {
    /// Rows in the dataset.
    pub fn len(&self) -> usize {
        match self {
            Dataset::Series(s) => s.len(),
            Dataset::Panel(p) => p.n_obs(),
            Dataset::Accel(a) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn generate(spec: &SimSpec, labels: &SeriesLabels) -> Result<Dataset, InvalidParams> {
    Ok(match &spec.kind {
        SimKind::Recovery(p) => Dataset::Series(gen_recovery(p, spec.seed, labels)?),
        SimKind::Drift(p) => Dataset::Series(gen_drift(p, spec.seed, labels)?),
        SimKind::Panel(p) => Dataset::Panel(gen_panel(p, spec.seed)?),
        SimKind::Accel(p) => Dataset::Accel(gen_accel(p, spec.seed, &labels.subject_id)?),
    })
}

fn series(labels: &SeriesLabels, points: impl Iterator<Item = (f64, f64)>) -> BiomarkerSeries {
    let raw = points
        .map(|(t, v)| {
            BiomarkerSample::new(&*labels.subject_id, &*labels.channel, t, v, &*labels.unit)
        })
        .collect();
    validate_series(raw).expect("generated times are strictly increasing")
}

/// Recovery curve sampled at `t = i·dt` plus Gaussian noise.
pub fn gen_recovery(
    p: &RecoveryParams,
    seed: u64,
    labels: &SeriesLabels,
) -> Result<BiomarkerSeries, InvalidParams> {
    check(
        p.a.is_finite() && (RESTING_RANGE.0..=RESTING_RANGE.1).contains(&p.a),
        "a",
        "must lie in [30, 240]",
    )?;
    check(
        p.d.is_finite() && p.d > p.a,
        "d",
        "must be finite and above a",
    )?;
    check(
        p.theta.is_finite() && p.theta > 0.0,
        "theta",
        "must be finite and > 0",
    )?;
    let model =
        RecoveryModel::new(p.a, p.d, p.theta).map_err(|e| invalid("theta", format!("{e}")))?;
    check(
        p.noise_sigma >= 0.0 && p.noise_sigma.is_finite(),
        "sigma",
        "must be finite and >= 0",
    )?;
    check(p.dt > 0.0 && p.dt.is_finite(), "dt", "must be positive")?;
    check(p.n >= 1, "n", "must be at least 1")?;

    let mut rng = SimRng::new(seed);
    Ok(series(
        labels,
        (0..p.n).map(|i| {
            let t = i as f64 * p.dt;
            let clean = eval_recovery(&model, t).expect("t >= 0");
            let noise = if p.noise_sigma > 0.0 {
                p.noise_sigma * rng.standard_normal()
            } else {
                0.0
            };
            (t, clean + noise)
        }),
    ))
}

/// Linear drift `start + slope·t` plus Gaussian noise.
pub fn gen_drift(
    p: &DriftParams,
    seed: u64,
    labels: &SeriesLabels,
) -> Result<BiomarkerSeries, InvalidParams> {
    check(p.start_value.is_finite(), "start", "must be finite")?;
    check(p.slope.is_finite(), "slope", "must be finite")?;
    check(
        p.noise_sigma >= 0.0 && p.noise_sigma.is_finite(),
        "sigma",
        "must be finite and >= 0",
    )?;
    check(p.dt > 0.0 && p.dt.is_finite(), "dt", "must be positive")?;
    check(p.n >= 1, "n", "must be at least 1")?;

    let mut rng = SimRng::new(seed);
    Ok(series(
        labels,
        (0..p.n).map(|i| {
            let t = i as f64 * p.dt;
            let noise = if p.noise_sigma > 0.0 {
                p.noise_sigma * rng.standard_normal()
            } else {
                0.0
            };
            (t, p.start_value + p.slope * t + noise)
        }),
    ))
}

/// Factor panel with a planted linear target.
///
/// Factor columns are drawn standard normal and then z-scored with their
/// sample mean and standard deviation, so the target `Σ bᵢ·zᵢ + noise` is
/// exactly linear in the standardized factors a fit will see. Factors are
/// named `f1 … fn`; columns are drawn in order, row by row, then the noise.
pub fn gen_panel(p: &PanelParams, seed: u64) -> Result<FactorMatrix, InvalidParams> {
    let n = p.true_coefficients.len();
    check(n >= 1, "coefficients", "need at least one factor")?;
    check(
        p.true_coefficients.iter().all(|b| b.is_finite()),
        "coefficients",
        "must be finite",
    )?;
    check(p.m >= n + 2, "m", "need at least factors + 2 observations")?;
    check(
        p.noise_sigma >= 0.0 && p.noise_sigma.is_finite(),
        "sigma",
        "must be finite and >= 0",
    )?;

    let mut rng = SimRng::new(seed);
    let mut rows: Vec<Vec<f64>> = (0..p.m)
        .map(|_| (0..n).map(|_| rng.standard_normal()).collect())
        .collect();
    for c in 0..n {
        let mean = rows.iter().map(|r| r[c]).sum::<f64>() / p.m as f64;
        let ss: f64 = rows.iter().map(|r| (r[c] - mean) * (r[c] - mean)).sum();
        let std = sqrt(ss / (p.m - 1) as f64);
        for r in rows.iter_mut() {
            r[c] = (r[c] - mean) / std;
        }
    }
    let target: Vec<f64> = rows
        .iter()
        .map(|r| {
            let signal: f64 = r.iter().zip(&p.true_coefficients).map(|(z, b)| z * b).sum();
            let noise = if p.noise_sigma > 0.0 {
                p.noise_sigma * rng.standard_normal()
            } else {
                0.0
            };
            signal + noise
        })
        .collect();
    let names = (1..=n).map(|i| format!("f{i}")).collect();
    FactorMatrix::new(names, rows, target).map_err(|e| invalid("m", format!("{e}")))
}

/// One sensor per location (`s_<location>`), magnitude along the z axis,
/// samples interleaved by time.
pub fn gen_accel(
    p: &AccelParams,
    seed: u64,
    subject_id: &str,
) -> Result<Vec<AccelSample>, InvalidParams> {
    check(
        !p.profiles.is_empty(),
        "profile",
        "need at least one location",
    )?;
    check(p.dt > 0.0 && p.dt.is_finite(), "dt", "must be positive")?;
    check(p.n >= 1, "n", "must be at least 1")?;
    for prof in &p.profiles {
        check(
            prof.amplitude >= 0.0 && prof.amplitude.is_finite(),
            "profile",
            "amplitude must be finite and >= 0",
        )?;
        check(
            prof.frequency.is_finite(),
            "profile",
            "frequency must be finite",
        )?;
        check(
            prof.noise_sigma >= 0.0 && prof.noise_sigma.is_finite(),
            "profile",
            "noise must be finite and >= 0",
        )?;
    }

    let mut rng = SimRng::new(seed);
    let mut out = Vec::with_capacity(p.n * p.profiles.len());
    for i in 0..p.n {
        let t = i as f64 * p.dt;
        for prof in &p.profiles {
            let noise = if prof.noise_sigma > 0.0 {
                prof.noise_sigma * rng.standard_normal()
            } else {
                0.0
            };
            let mag =
                1.0 + prof.amplitude * sin(core::f64::consts::TAU * prof.frequency * t) + noise;
            let sample = AccelSample::new(
                subject_id,
                format!("s_{}", prof.location),
                &*prof.location,
                t,
                0.0,
                0.0,
                mag,
            )
            .map_err(|_| {
                invalid(
                    "profile",
                    format!("magnitude {mag} g at t={t} exceeds the 16 g guard"),
                )
            })?;
            out.push(sample);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rec(sigma: f64, n: usize) -> RecoveryParams {
        RecoveryParams {
            a: 60.0,
            d: 180.0,
            theta: 0.05,
            noise_sigma: sigma,
            n,
            dt: 5.0,
        }
    }

    #[test]
    fn noiseless_recovery_matches_model() {
        let s = gen_recovery(&rec(0.0, 61), 1, &SeriesLabels::heart_rate()).unwrap();
        let m = RecoveryModel::new(60.0, 180.0, 0.05).unwrap();
        for smp in s.samples() {
            assert_eq!(smp.value, eval_recovery(&m, smp.t).unwrap());
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let l = SeriesLabels::heart_rate();
        assert_eq!(
            gen_recovery(&rec(2.0, 50), 9, &l),
            gen_recovery(&rec(2.0, 50), 9, &l)
        );
        assert_ne!(
            gen_recovery(&rec(2.0, 50), 9, &l),
            gen_recovery(&rec(2.0, 50), 10, &l)
        );
    }

    #[test]
    fn residual_mean_small() {
        let s = gen_recovery(&rec(2.0, 10_000), 3, &SeriesLabels::heart_rate()).unwrap();
        let m = RecoveryModel::new(60.0, 180.0, 0.05).unwrap();
        let mean = s
            .samples()
            .iter()
            .map(|x| x.value - eval_recovery(&m, x.t).unwrap())
            .sum::<f64>()
            / 10_000.0;
        // 3σ/√n
        assert!(mean.abs() < 0.06);
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = rec(0.0, 10);
        p.theta = -1.0;
        assert_eq!(
            gen_recovery(&p, 0, &SeriesLabels::heart_rate())
                .unwrap_err()
                .param,
            "theta"
        );
        let panel = PanelParams {
            true_coefficients: vec![1.0; 6],
            m: 3,
            noise_sigma: 0.0,
        };
        assert_eq!(gen_panel(&panel, 0).unwrap_err().param, "m");
        let drift = DriftParams {
            start_value: 0.0,
            slope: 1.0,
            noise_sigma: 0.0,
            n: 10,
            dt: 0.0,
        };
        assert!(gen_drift(&drift, 0, &SeriesLabels::heart_rate()).is_err());
    }

    #[test]
    fn still_accel_has_zero_variance() {
        let p = AccelParams {
            profiles: vec![LocationProfile {
                location: "head".into(),
                amplitude: 0.0,
                frequency: 1.0,
                noise_sigma: 0.0,
            }],
            n: 20,
            dt: 0.1,
        };
        let s = gen_accel(&p, 0, "sim").unwrap();
        let f = crate::activity::window_features(&s, 1.0).unwrap();
        assert!(f.iter().all(|w| w.variance == 0.0));
    }
}
