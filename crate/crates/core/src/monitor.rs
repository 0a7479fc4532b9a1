//! Zone classification, trailing-window trends and threshold-crossing alerts.
//!
//! A [`ThresholdBand`] carries normal limits and, beyond them, risk limits.
//! Values on the closed normal interval are [`Zone::Normal`]; values strictly
//! past a risk limit are [`Zone::Risk`]; everything between is
//! [`Zone::Abnormal`]. Trends are ordinary least-squares lines over a trailing
//! window and crossings are solved analytically on that line.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use libm::sqrt;
use thiserror::Error;

use crate::model::{BiomarkerSample, BiomarkerSeries};
use crate::special::normal_quantile;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonitorError {
    #[error("band for `{0}` has no limits")]
    NoLimits(String),
    #[error("band for `{channel}`: {reason}")]
    InvalidBand {
        channel: String,
        reason: &'static str,
    },
    #[error("need at least 2 samples inside the trailing window, found {0}")]
    TooFewPointsInWindow(usize),
    #[error("window must be finite and non-negative, got {0}")]
    InvalidWindow(f64),
    #[error("forecast time {t} precedes the trend window end {window_end}")]
    PastTime { t: f64, window_end: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Zone {
    Normal,
    Abnormal,
    Risk,
}

impl Zone {
    pub fn as_str(self) -> &'static str {
        match self {
            Zone::Normal => "normal",
            Zone::Abnormal => "abnormal",
            Zone::Risk => "risk",
        }
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which limit of a band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Limit {
    LowerNormal,
    UpperNormal,
    LowerRisk,
    UpperRisk,
}

impl Limit {
    pub fn as_str(self) -> &'static str {
        match self {
            Limit::LowerNormal => "lower_normal",
            Limit::UpperNormal => "upper_normal",
            Limit::LowerRisk => "lower_risk",
            Limit::UpperRisk => "upper_risk",
        }
    }

    pub fn is_upper(self) -> bool {
        matches!(self, Limit::UpperNormal | Limit::UpperRisk)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Rising => "rising",
            Direction::Falling => "falling",
        }
    }
}

/// Normal and risk limits for one channel.
///
/// A risk limit on a side requires a normal limit on that side and must lie
/// strictly beyond it. `confidence` sets forecast prediction intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdBand {
    channel: String,
    lower_normal: Option<f64>,
    upper_normal: Option<f64>,
    lower_risk: Option<f64>,
    upper_risk: Option<f64>,
    confidence: f64,
}

pub const DEFAULT_CONFIDENCE: f64 = 0.95;

impl ThresholdBand {
    pub fn new(
        channel: impl Into<String>,
        lower_normal: Option<f64>,
        upper_normal: Option<f64>,
        lower_risk: Option<f64>,
        upper_risk: Option<f64>,
        confidence: f64,
    ) -> Result<Self, MonitorError> {
        let channel = channel.into();
        let invalid = |reason| MonitorError::InvalidBand {
            channel: channel.clone(),
            reason,
        };
        let limits = [lower_normal, upper_normal, lower_risk, upper_risk];
        if limits.iter().all(Option::is_none) {
            return Err(MonitorError::NoLimits(channel));
        }
        if limits.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("limits must be finite"));
        }
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(invalid("confidence must be in (0, 1)"));
        }
        if let (Some(lo), Some(hi)) = (lower_normal, upper_normal) {
            if lo > hi {
                return Err(invalid("lower_normal exceeds upper_normal"));
            }
        }
        match (lower_risk, lower_normal) {
            (Some(_), None) => return Err(invalid("lower_risk requires lower_normal")),
            (Some(r), Some(n)) if r >= n => {
                return Err(invalid("lower_risk must be strictly below lower_normal"))
            }
            _ => {}
        }
        match (upper_risk, upper_normal) {
            (Some(_), None) => return Err(invalid("upper_risk requires upper_normal")),
            (Some(r), Some(n)) if r <= n => {
                return Err(invalid("upper_risk must be strictly above upper_normal"))
            }
            _ => {}
        }
        Ok(Self {
            channel,
            lower_normal,
            upper_normal,
            lower_risk,
            upper_risk,
            confidence,
        })
    }

    pub fn channel(&self) -> &str {
        &self.channel
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn limit(&self, which: Limit) -> Option<f64> {
        match which {
            Limit::LowerNormal => self.lower_normal,
            Limit::UpperNormal => self.upper_normal,
            Limit::LowerRisk => self.lower_risk,
            Limit::UpperRisk => self.upper_risk,
        }
    }

    /// Present limits as `(which, value)`.
    pub fn limits(&self) -> impl Iterator<Item = (Limit, f64)> + '_ {
        [
            Limit::LowerNormal,
            Limit::UpperNormal,
            Limit::LowerRisk,
            Limit::UpperRisk,
        ]
        .into_iter()
        .filter_map(|l| self.limit(l).map(|v| (l, v)))
    }

    /// Same band with every limit shifted by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            channel: self.channel.clone(),
            lower_normal: self.lower_normal.map(|v| v + c),
            upper_normal: self.upper_normal.map(|v| v + c),
            lower_risk: self.lower_risk.map(|v| v + c),
            upper_risk: self.upper_risk.map(|v| v + c),
            confidence: self.confidence,
        }
    }
}

pub fn classify(value: f64, band: &ThresholdBand) -> Zone {
    let below_risk = band.lower_risk.is_some_and(|r| value < r);
    let above_risk = band.upper_risk.is_some_and(|r| value > r);
    if below_risk || above_risk {
        return Zone::Risk;
    }
    let lo_ok = band.lower_normal.is_none_or(|l| value >= l);
    let hi_ok = band.upper_normal.is_none_or(|u| value <= u);
    if lo_ok && hi_ok {
        Zone::Normal
    } else {
        Zone::Abnormal
    }
}

/// Least-squares line over a trailing window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendModel {
    /// Units per second.
    pub slope: f64,
    /// Fitted value at `window_start_t`.
    pub intercept: f64,
    pub residual_std: f64,
    pub n: usize,
    /// Time of the first sample in the window.
    pub window_start_t: f64,
    /// Time of the last sample in the window.
    pub window_end_t: f64,
    /// Mean sample time in the window.
    pub t_mean: f64,
    /// Σ(tᵢ - t̄)² over the window.
    pub t_sxx: f64,
}

impl TrendModel {
    #[inline]
    pub fn value_at(&self, t: f64) -> f64 {
        self.intercept + self.slope * (t - self.window_start_t)
    }
}

fn window_slice(
    samples: &[BiomarkerSample],
    window: f64,
) -> Result<&[BiomarkerSample], MonitorError> {
    if !(window >= 0.0) || !window.is_finite() {
        return Err(MonitorError::InvalidWindow(window));
    }
    let Some(last) = samples.last() else {
        return Err(MonitorError::TooFewPointsInWindow(0));
    };
    let cutoff = last.t - window;
    let start = samples.partition_point(|s| s.t < cutoff);
    Ok(&samples[start..])
}

fn trend_on(samples: &[BiomarkerSample], window: f64) -> Result<TrendModel, MonitorError> {
    let w = window_slice(samples, window)?;
    let n = w.len();
    if n < 2 {
        return Err(MonitorError::TooFewPointsInWindow(n));
    }
    let nf = n as f64;
    let t_mean = w.iter().map(|s| s.t).sum::<f64>() / nf;
    let y_mean = w.iter().map(|s| s.value).sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for s in w {
        let dt = s.t - t_mean;
        sxx += dt * dt;
        sxy += dt * (s.value - y_mean);
    }
    let slope = sxy / sxx;
    let window_start_t = w[0].t;
    let intercept = y_mean + slope * (window_start_t - t_mean);
    let residual_std = if n > 2 {
        let rss: f64 = w
            .iter()
            .map(|s| {
                let r = s.value - (y_mean + slope * (s.t - t_mean));
                r * r
            })
            .sum();
        sqrt(rss / (nf - 2.0))
    } else {
        0.0
    };
    Ok(TrendModel {
        slope,
        intercept,
        residual_std,
        n,
        window_start_t,
        window_end_t: w[n - 1].t,
        t_mean,
        t_sxx: sxx,
    })
}

/// Ordinary least-squares line over samples with `t ≥ t_last - window`.
pub fn fit_trend(series: &BiomarkerSeries, window: f64) -> Result<TrendModel, MonitorError> {
    trend_on(series.samples(), window)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forecast {
    pub value: f64,
    /// Half-width of the two-sided prediction interval.
    pub half_width: f64,
}

/// Point forecast and prediction-interval half-width at `t_future`.
///
/// The half-width is `z·s·sqrt(1 + 1/n + (t - t̄)²/Sxx)` with `z` the
/// two-sided normal quantile at `confidence`.
pub fn forecast_value(
    trend: &TrendModel,
    t_future: f64,
    confidence: f64,
) -> Result<Forecast, MonitorError> {
    if !(t_future >= trend.window_end_t) {
        return Err(MonitorError::PastTime {
            t: t_future,
            window_end: trend.window_end_t,
        });
    }
    let value = trend.value_at(t_future);
    if trend.residual_std == 0.0 {
        return Ok(Forecast {
            value,
            half_width: 0.0,
        });
    }
    let z = normal_quantile(0.5 + confidence / 2.0);
    let dt = t_future - trend.t_mean;
    let leverage = 1.0 + 1.0 / trend.n as f64 + dt * dt / trend.t_sxx;
    Ok(Forecast {
        value,
        half_width: z * trend.residual_std * sqrt(leverage),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub t_cross: f64,
    pub limit: Limit,
    pub limit_value: f64,
    pub direction: Direction,
}

/// Earliest outward crossing of the trend line within the horizon.
///
/// Only deteriorating crossings count: upper limits while rising, lower
/// limits while falling. Candidates must fall in
/// `(window_end_t, window_end_t + horizon]`.
pub fn crossing_on_trend(
    trend: &TrendModel,
    band: &ThresholdBand,
    horizon: f64,
) -> Option<Crossing> {
    if trend.slope == 0.0 || !trend.slope.is_finite() {
        return None;
    }
    let direction = if trend.slope > 0.0 {
        Direction::Rising
    } else {
        Direction::Falling
    };
    let end = trend.window_end_t;
    band.limits()
        .filter(|(l, _)| l.is_upper() == (direction == Direction::Rising))
        .filter_map(|(limit, limit_value)| {
            let t_cross = trend.window_start_t + (limit_value - trend.intercept) / trend.slope;
            (t_cross > end && t_cross <= end + horizon).then_some(Crossing {
                t_cross,
                limit,
                limit_value,
                direction,
            })
        })
        .min_by(|a, b| a.t_cross.total_cmp(&b.t_cross))
}

pub fn forecast_crossing(
    series: &BiomarkerSeries,
    band: &ThresholdBand,
    window: f64,
    horizon: f64,
) -> Result<Option<Crossing>, MonitorError> {
    let trend = fit_trend(series, window)?;
    Ok(crossing_on_trend(&trend, band, horizon))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlertKind {
    EnteredAbnormal,
    EnteredRisk,
    PredictedCrossing,
}

impl AlertKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AlertKind::EnteredAbnormal => "entered_abnormal",
            AlertKind::EnteredRisk => "entered_risk",
            AlertKind::PredictedCrossing => "predicted_crossing",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alert {
    pub subject_id: String,
    pub channel: String,
    pub kind: AlertKind,
    pub t_issued: f64,
    /// Set for predicted crossings only, never before `t_issued`.
    pub t_predicted: Option<f64>,
    /// Crossed limit, for predicted crossings.
    pub limit: Option<Limit>,
    pub detail: String,
}

fn alerts_on(
    previous: Zone,
    samples: &[BiomarkerSample],
    band: &ThresholdBand,
    window: f64,
    horizon: f64,
) -> Vec<Alert> {
    let mut alerts = Vec::new();
    let Some(latest) = samples.last() else {
        return alerts;
    };
    let zone = classify(latest.value, band);
    let transition = match (previous == zone, zone) {
        (false, Zone::Abnormal) => Some(AlertKind::EnteredAbnormal),
        (false, Zone::Risk) => Some(AlertKind::EnteredRisk),
        _ => None,
    };
    if let Some(kind) = transition {
        alerts.push(Alert {
            subject_id: latest.subject_id.clone(),
            channel: latest.channel.clone(),
            kind,
            t_issued: latest.t,
            t_predicted: None,
            limit: None,
            detail: format!(
                "{} is {} {} at t={} s, now in the {} range (was {})",
                latest.channel, latest.value, latest.unit, latest.t, zone, previous
            ),
        });
    }
    let crossing = trend_on(samples, window)
        .ok()
        .and_then(|trend| crossing_on_trend(&trend, band, horizon));
    if let Some(c) = crossing {
        alerts.push(Alert {
            subject_id: latest.subject_id.clone(),
            channel: latest.channel.clone(),
            kind: AlertKind::PredictedCrossing,
            t_issued: latest.t,
            t_predicted: Some(c.t_cross),
            limit: Some(c.limit),
            detail: format!(
                "{} is {} and expected to reach the {} limit {} {} at t={} s",
                latest.channel,
                c.direction.as_str(),
                c.limit.as_str(),
                c.limit_value,
                latest.unit,
                c.t_cross
            ),
        });
    }
    alerts
}

/// Alerts for the latest sample of `series` given the zone it was in before.
///
/// Emits a transition alert when the latest sample enters the abnormal or
/// risk zone, and a predicted-crossing alert when the trend reaches a limit
/// within `horizon`. A window too short for a trend yields no crossing alert.
pub fn evaluate_alerts(
    previous: Zone,
    series: &BiomarkerSeries,
    band: &ThresholdBand,
    window: f64,
    horizon: f64,
) -> Vec<Alert> {
    alerts_on(previous, series.samples(), band, window, horizon)
}

/// State carried between replay steps for one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorState {
    pub zone: Zone,
    /// Limit of the crossing already announced, if any.
    pub announced: Option<Limit>,
}

impl Default for MonitorState {
    fn default() -> Self {
        Self {
            zone: Zone::Normal,
            announced: None,
        }
    }
}

/// Replays a series in time order, calling [`evaluate_alerts`] on each
/// growing prefix.
///
/// Zone transitions are reported as they happen. A predicted crossing is
/// reported once per limit and re-armed when the forecast stops predicting
/// it, so a steady drift yields one notice rather than one per sample.
pub fn replay_alerts(
    series: &BiomarkerSeries,
    band: &ThresholdBand,
    window: f64,
    horizon: f64,
    initial: MonitorState,
) -> (Vec<Alert>, MonitorState) {
    let samples = series.samples();
    let mut state = initial;
    let mut out = Vec::new();
    for end in 1..=samples.len() {
        let prefix = &samples[..end];
        let mut predicted = None;
        for alert in alerts_on(state.zone, prefix, band, window, horizon) {
            if alert.kind == AlertKind::PredictedCrossing {
                predicted = alert.limit;
                if state.announced == alert.limit {
                    continue;
                }
            }
            out.push(alert);
        }
        state.announced = predicted;
        state.zone = classify(samples[end - 1].value, band);
    }
    (out, state)
}

/// Current standing of one channel in plain terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSummary {
    pub subject_id: String,
    pub channel: String,
    pub latest_t: f64,
    pub latest_value: f64,
    pub zone: Zone,
    pub trend: Option<TrendModel>,
    pub crossing: Option<Crossing>,
    pub text: String,
}

pub fn summarize(
    series: &BiomarkerSeries,
    band: &ThresholdBand,
    window: f64,
    horizon: f64,
) -> ChannelSummary {
    let latest = series.last();
    let zone = classify(latest.value, band);
    let trend = fit_trend(series, window).ok();
    let crossing = trend
        .as_ref()
        .and_then(|t| crossing_on_trend(t, band, horizon));

    let mut text = format!(
        "{} for {} is {} {}, which is in the {} range.",
        series.channel(),
        series.subject_id(),
        latest.value,
        latest.unit,
        zone
    );
    match (&trend, &crossing) {
        (_, Some(c)) => text.push_str(&format!(
            " It is {} and is expected to pass the {} limit of {} in about {} s.",
            c.direction.as_str(),
            c.limit.as_str().replace('_', " "),
            c.limit_value,
            c.t_cross - latest.t
        )),
        (Some(t), None) if t.slope != 0.0 => text.push_str(&format!(
            " It is {} by {} {} per hour with no limit expected within {} s.",
            if t.slope > 0.0 { "rising" } else { "falling" },
            libm::fabs(t.slope) * 3600.0,
            latest.unit,
            horizon
        )),
        (Some(_), None) => text.push_str(" It is steady."),
        (None, None) => text.push_str(" Not enough recent readings to judge the trend."),
    }

    ChannelSummary {
        subject_id: series.subject_id().into(),
        channel: series.channel().into(),
        latest_t: latest.t,
        latest_value: latest.value,
        zone,
        trend,
        crossing,
        text,
    }
}
