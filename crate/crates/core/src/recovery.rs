//! Heart-rate recovery curve `f(t) = a + (d - a)·exp(-θ·t)`.
//!
//! `a` is the resting rate, `d` the rate right after exercise and `θ` the
//! recovery rate. The curve is linear in `(a, d)` once `θ` is fixed, so the
//! fit eliminates them in closed form (variable projection) and runs a damped
//! Gauss-Newton iteration on `θ` alone, in log-space to keep it positive.

use alloc::vec::Vec;

use libm::{exp, fabs, log, sqrt};
use thiserror::Error;

use crate::model::BiomarkerSeries;

/// Plausibility range for the resting rate, bpm.
pub const RESTING_RANGE: (f64, f64) = (30.0, 240.0);

/// Smallest fitted elevation `d - a` treated as a recovery signal, bpm.
pub const MIN_ELEVATION: f64 = 1.0;

/// Default residual elevation fraction for recovery time.
pub const DEFAULT_HRRT_FRACTION: f64 = 0.05;

/// Bounds for the log-linear starting value of θ.
const THETA_SEED_RANGE: (f64, f64) = (1e-4, 1.0);

/// Hard bounds on θ during iteration.
const THETA_LIMITS: (f64, f64) = (1e-12, 1e6);

/// Largest accepted log-step in θ per iteration.
const MAX_LOG_STEP: f64 = 2.0;

const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MIN: f64 = 1e-12;
const LAMBDA_MAX: f64 = 1e16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecoveryError {
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("invalid recovery model a={a}, d={d}, theta={theta}")]
    InvalidModel { a: f64, d: f64, theta: f64 },
    #[error("need at least 4 samples to fit, got {0}")]
    TooFewPoints(usize),
    #[error(
        "fitted elevation d - a = {elevation} bpm is below {MIN_ELEVATION} bpm; no recovery signal"
    )]
    DegenerateElevation { elevation: f64 },
    #[error("fitted resting rate a={a} bpm is outside the plausible range")]
    ImplausibleResting { a: f64 },
    #[error("residual fraction must be in (0, 1), got {0}")]
    InvalidFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryModel {
    a: f64,
    d: f64,
    theta: f64,
}

impl RecoveryModel {
    pub fn new(a: f64, d: f64, theta: f64) -> Result<Self, RecoveryError> {
        let ok = a.is_finite()
            && d.is_finite()
            && theta.is_finite()
            && theta > 0.0
            && d > a
            && (RESTING_RANGE.0..=RESTING_RANGE.1).contains(&a);
        if ok {
            Ok(Self { a, d, theta })
        } else {
            Err(RecoveryError::InvalidModel { a, d, theta })
        }
    }

    /// Resting heart rate, bpm.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Heart rate right after exercise, bpm.
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Recovery rate, 1/s.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    #[inline]
    fn value_at(&self, t: f64) -> f64 {
        self.a + (self.d - self.a) * exp(-self.theta * t)
    }
}

/// Deterministic part of the recovery curve at `t` seconds.
pub fn eval_recovery(model: &RecoveryModel, t: f64) -> Result<f64, RecoveryError> {
    if !(t >= 0.0) {
        return Err(RecoveryError::NegativeTime(t));
    }
    Ok(model.value_at(t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// Relative change in θ that ends the iteration.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub model: RecoveryModel,
    /// Residual sum of squares at `model`, bpm².
    pub rss: f64,
    /// `sqrt(rss / (n - 3))`, bpm.
    pub residual_std: f64,
    pub iterations: usize,
    /// False when `max_iter` ran out or damping saturated; the model is then
    /// the best point seen.
    pub converged: bool,
}

/// Closed-form solution of the linear subproblem at a fixed θ.
#[derive(Debug, Clone, Copy)]
struct Projection {
    theta: f64,
    /// Resting level.
    level: f64,
    /// Elevation `d - a`.
    elevation: f64,
    rss: f64,
}

/// Data for the fit, held as slices of the series.
struct Problem {
    t: Vec<f64>,
    y: Vec<f64>,
    y_mean: f64,
}

impl Problem {
    fn project(&self, theta: f64) -> Projection {
        let n = self.t.len() as f64;
        let e: Vec<f64> = self.t.iter().map(|&t| exp(-theta * t)).collect();
        let e_mean = e.iter().sum::<f64>() / n;
        let mut see = 0.0;
        let mut sey = 0.0;
        for (ei, yi) in e.iter().zip(&self.y) {
            let de = ei - e_mean;
            see += de * de;
            sey += de * (yi - self.y_mean);
        }
        let (level, elevation) = if see > 0.0 {
            let c1 = sey / see;
            (self.y_mean - c1 * e_mean, c1)
        } else {
            (self.y_mean, 0.0)
        };
        let rss = e
            .iter()
            .zip(&self.y)
            .map(|(ei, yi)| {
                let r = yi - level - elevation * ei;
                r * r
            })
            .sum();
        Projection {
            theta,
            level,
            elevation,
            rss,
        }
    }

    /// Gradient and Gauss-Newton curvature of rss/2 with respect to ln θ.
    ///
    /// Uses the Kaufman Jacobian `-P⊥ (c₁ ∂e/∂θ)`; its gradient coincides with
    /// the exact one because the residual is orthogonal to span{1, e}.
    fn log_derivatives(&self, p: &Projection) -> (f64, f64) {
        let n = self.t.len() as f64;
        let theta = p.theta;
        let e: Vec<f64> = self.t.iter().map(|&t| exp(-theta * t)).collect();
        let de: Vec<f64> = self.t.iter().zip(&e).map(|(&t, &ei)| -t * ei).collect();

        let mut grad = 0.0;
        for ((ei, dei), yi) in e.iter().zip(&de).zip(&self.y) {
            let r = yi - p.level - p.elevation * ei;
            grad -= p.elevation * dei * r;
        }

        let e_mean = e.iter().sum::<f64>() / n;
        let de_mean = de.iter().sum::<f64>() / n;
        let mut see = 0.0;
        let mut sed = 0.0;
        for (ei, dei) in e.iter().zip(&de) {
            see += (ei - e_mean) * (ei - e_mean);
            sed += (ei - e_mean) * (dei - de_mean);
        }
        let beta = if see > 0.0 { sed / see } else { 0.0 };
        let perp2: f64 = e
            .iter()
            .zip(&de)
            .map(|(ei, dei)| {
                let q = (dei - de_mean) - beta * (ei - e_mean);
                q * q
            })
            .sum();
        let curvature = p.elevation * p.elevation * perp2;

        (theta * grad, theta * theta * curvature)
    }
}

/// Starting θ from a log-linear fit over the first half of the series.
fn seed_theta(t: &[f64], y: &[f64]) -> f64 {
    let floor = y.iter().copied().fold(f64::INFINITY, f64::min);
    let half = (t.len() / 2).max(2);
    let xs = &t[..half];
    let zs: Vec<f64> = y[..half].iter().map(|&v| log(v - floor + 0.5)).collect();
    let n = half as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let zm = zs.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxz = 0.0;
    for (x, z) in xs.iter().zip(&zs) {
        sxx += (x - xm) * (x - xm);
        sxz += (x - xm) * (z - zm);
    }
    let slope = sxz / sxx;
    if slope.is_finite() {
        (-slope).clamp(THETA_SEED_RANGE.0, THETA_SEED_RANGE.1)
    } else {
        THETA_SEED_RANGE.0
    }
}

/// Least-squares fit of the recovery curve to a series.
///
/// The series is assumed to start at recovery onset. A run that does not
/// meet `config.tol` within `config.max_iter` still returns the best model
/// found, with `converged = false`.
pub fn fit_recovery(
    series: &BiomarkerSeries,
    config: &FitConfig,
) -> Result<FitResult, RecoveryError> {
    let n = series.len();
    if n < 4 {
        return Err(RecoveryError::TooFewPoints(n));
    }
    let t = series.times();
    let y = series.values();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let problem = Problem { t, y, y_mean };

    let mut best = problem.project(seed_theta(&problem.t, &problem.y));
    let mut lambda = LAMBDA_INIT;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iter.max(1) {
        iterations += 1;
        let (grad, curv) = problem.log_derivatives(&best);
        if grad == 0.0 || curv <= 0.0 || !curv.is_finite() {
            converged = true;
            break;
        }
        let step = (-grad / (curv * (1.0 + lambda))).clamp(-MAX_LOG_STEP, MAX_LOG_STEP);
        let theta_new = (best.theta * exp(step)).clamp(THETA_LIMITS.0, THETA_LIMITS.1);
        let rel_change = fabs(theta_new - best.theta) / best.theta;
        let trial = problem.project(theta_new);

        if trial.rss <= best.rss {
            best = trial;
            lambda = (lambda / 10.0).max(LAMBDA_MIN);
            if rel_change < config.tol {
                converged = true;
                break;
            }
        } else {
            // A rejected step this small means rss is flat to rounding.
            if rel_change < config.tol {
                converged = true;
                break;
            }
            lambda *= 10.0;
            if lambda > LAMBDA_MAX {
                break;
            }
        }
    }

    if !(best.elevation >= MIN_ELEVATION) {
        return Err(RecoveryError::DegenerateElevation {
            elevation: best.elevation,
        });
    }
    let a = best.level;
    let d = best.level + best.elevation;
    if !(RESTING_RANGE.0..=RESTING_RANGE.1).contains(&a) {
        return Err(RecoveryError::ImplausibleResting { a });
    }
    let model = RecoveryModel::new(a, d, best.theta)?;

    let rss: f64 = problem
        .t
        .iter()
        .zip(&problem.y)
        .map(|(&ti, &yi)| {
            let r = yi - model.value_at(ti);
            r * r
        })
        .sum();
    let residual_std = if n > 3 {
        sqrt(rss / (n - 3) as f64)
    } else {
        0.0
    };

    Ok(FitResult {
        model,
        rss,
        residual_std,
        iterations,
        converged,
    })
}

/// Time for the elevation above rest to decay to fraction `p` of its
/// initial value: `ln(1/p) / θ`.
pub fn recovery_time(model: &RecoveryModel, p: f64) -> Result<f64, RecoveryError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(RecoveryError::InvalidFraction(p));
    }
    Ok(log(1.0 / p) / model.theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_series, BiomarkerSample};
    use alloc::vec::Vec;

    fn series_from(t: &[f64], y: &[f64]) -> BiomarkerSeries {
        let raw: Vec<_> = t
            .iter()
            .zip(y)
            .map(|(&t, &v)| BiomarkerSample::new("s", "heart_rate", t, v, "bpm"))
            .collect();
        validate_series(raw).unwrap()
    }

    fn noiseless(a: f64, d: f64, theta: f64) -> BiomarkerSeries {
        let m = RecoveryModel::new(a, d, theta).unwrap();
        let t: Vec<f64> = (0..=60).map(|i| 5.0 * i as f64).collect();
        let y: Vec<f64> = t.iter().map(|&t| eval_recovery(&m, t).unwrap()).collect();
        series_from(&t, &y)
    }

    #[test]
    fn eval_at_origin_and_limit() {
        let m = RecoveryModel::new(60.0, 180.0, 0.1).unwrap();
        assert_eq!(eval_recovery(&m, 0.0).unwrap(), 180.0);
        assert!((eval_recovery(&m, 1e6).unwrap() - 60.0).abs() < 1e-9);
        // 60 + 120/e
        assert!((eval_recovery(&m, 10.0).unwrap() - 104.145_532_940_573_3).abs() < 1e-10);
        assert_eq!(
            eval_recovery(&m, -1.0),
            Err(RecoveryError::NegativeTime(-1.0))
        );
    }

    #[test]
    fn model_invariants_enforced() {
        assert!(RecoveryModel::new(60.0, 50.0, 0.1).is_err());
        assert!(RecoveryModel::new(60.0, 180.0, 0.0).is_err());
        assert!(RecoveryModel::new(20.0, 180.0, 0.1).is_err());
        assert!(RecoveryModel::new(60.0, f64::NAN, 0.1).is_err());
    }

    #[test]
    fn fits_noiseless_curve() {
        let fit = fit_recovery(&noiseless(60.0, 180.0, 0.05), &FitConfig::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.model.a() / 60.0 - 1.0).abs() < 1e-6);
        assert!((fit.model.d() / 180.0 - 1.0).abs() < 1e-6);
        assert!((fit.model.theta() / 0.05 - 1.0).abs() < 1e-6);
        assert!(fit.rss < 1e-12);
        assert!(fit.iterations >= 1);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let t: Vec<f64> = (0..20).map(f64::from).collect();
        let y = [70.0; 20];
        assert!(matches!(
            fit_recovery(&series_from(&t, &y), &FitConfig::default()),
            Err(RecoveryError::DegenerateElevation { .. })
        ));
    }

    #[test]
    fn too_few_points() {
        let s = series_from(&[0.0, 1.0, 2.0], &[150.0, 120.0, 100.0]);
        assert_eq!(
            fit_recovery(&s, &FitConfig::default()),
            Err(RecoveryError::TooFewPoints(3))
        );
    }

    #[test]
    fn exhausted_iterations_return_best_so_far() {
        let cfg = FitConfig {
            tol: 1e-8,
            max_iter: 1,
        };
        let fit = fit_recovery(&noiseless(60.0, 180.0, 0.05), &cfg).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 1);
    }

    #[test]
    fn recovery_time_values() {
        let m = RecoveryModel::new(60.0, 180.0, 0.1).unwrap();
        assert!((recovery_time(&m, libm::exp(-1.0)).unwrap() - 10.0).abs() < 1e-12);
        let m = RecoveryModel::new(60.0, 180.0, 0.05).unwrap();
        // ln(20) / 0.05
        assert!((recovery_time(&m, 0.05).unwrap() - 59.914_645_471_079_81).abs() < 1e-10);
        assert_eq!(
            recovery_time(&m, 0.0),
            Err(RecoveryError::InvalidFraction(0.0))
        );
        assert_eq!(
            recovery_time(&m, 1.0),
            Err(RecoveryError::InvalidFraction(1.0))
        );
    }

    #[test]
    fn fitter_recovers_faster() {
        let fast = RecoveryModel::new(60.0, 180.0, 0.2).unwrap();
        let slow = RecoveryModel::new(60.0, 180.0, 0.05).unwrap();
        assert!(recovery_time(&fast, 0.05).unwrap() < recovery_time(&slow, 0.05).unwrap());
    }
}
