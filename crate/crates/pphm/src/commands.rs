//! Command bodies on parsed input, free of argument parsing and file IO.

use pphm_core::activity::{kmeans, load_distribution, window_features, AccelSample};
use pphm_core::monitor::{replay_alerts, summarize, MonitorState};
use pphm_core::predictor::{
    correlation_matrix, fit_linear, rank_predictors, significant_correlations, t_critical,
    FactorMatrix, FitOptions as LinearOptions,
};
use pphm_core::recovery::{fit_recovery, recovery_time};
use pphm_core::BiomarkerSeries;

use crate::config::{FitOptions, MonitorOptions};
use crate::error::{CliError, Result};
use crate::report::{
    ActivityReport, AlertRecord, ChannelRecord, ClusterRecord, CorrelationRecord, FitReport,
    LoadEntry, MonitorSummary, PredictorsReport, SignificantPair, WindowRow,
};

pub fn fit(series: &BiomarkerSeries, opts: &FitOptions) -> Result<FitReport> {
    let label = format!("{}/{}", series.subject_id(), series.channel());
    let res = fit_recovery(series, &opts.config)
        .map_err(|e| CliError::compute(format!("{label}: {e}")))?;
    let hrrt = recovery_time(&res.model, opts.hrrt_fraction)
        .map_err(|e| CliError::input(e.to_string()))?;
    Ok(FitReport::new(
        series.subject_id(),
        series.channel(),
        series.len(),
        &res,
        hrrt,
        opts.hrrt_fraction,
    ))
}

/// Replays every series against its channel band.
///
/// Alerts come out series by series (subject, then channel), each in time
/// order.
pub fn monitor(
    series: &[BiomarkerSeries],
    opts: &MonitorOptions,
) -> Result<(Vec<AlertRecord>, MonitorSummary)> {
    let mut alerts = Vec::new();
    let mut channels = Vec::new();
    for s in series {
        let band = opts.bands.get(s.channel()).ok_or_else(|| {
            CliError::input(format!("no band configured for channel `{}`", s.channel()))
        })?;
        let (found, _) = replay_alerts(s, band, opts.window, opts.horizon, MonitorState::default());
        let summary = summarize(s, band, opts.window, opts.horizon);
        channels.push(ChannelRecord::new(&summary, found.len()));
        alerts.extend(found.iter().map(AlertRecord::from));
    }
    Ok((
        alerts,
        MonitorSummary {
            window: opts.window,
            horizon: opts.horizon,
            channels,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorOptions {
    pub min_abs: f64,
    pub alpha: f64,
    pub interactions: bool,
    pub correlate: bool,
}

pub fn predictors(
    m: &FactorMatrix,
    target: &str,
    opts: &PredictorOptions,
) -> Result<PredictorsReport> {
    if opts.min_abs.is_nan() || opts.min_abs < 0.0 {
        return Err(CliError::input(format!(
            "--min-abs must be >= 0, got {}",
            opts.min_abs
        )));
    }
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(CliError::input(format!(
            "--alpha must be in (0, 1), got {}",
            opts.alpha
        )));
    }
    let fit = fit_linear(
        m,
        LinearOptions {
            interactions: opts.interactions,
        },
    )
    .map_err(|e| CliError::input(e.to_string()))?;
    let ranked = rank_predictors(&fit, opts.min_abs);
    let mut report = PredictorsReport::new(target, &fit, ranked, opts.min_abs);

    if opts.correlate {
        let corr =
            correlation_matrix(m, true, target).map_err(|e| CliError::input(e.to_string()))?;
        let sig = significant_correlations(&corr, m.n_obs(), opts.alpha)
            .map_err(|e| CliError::input(e.to_string()))?;
        let k = corr.len();
        report.correlation = Some(CorrelationRecord {
            names: corr.names.clone(),
            matrix: (0..k)
                .map(|i| (0..k).map(|j| corr.get(i, j)).collect())
                .collect(),
            alpha: opts.alpha,
            t_critical: t_critical(opts.alpha, (m.n_obs() - 2) as f64),
            significant: sig
                .into_iter()
                .map(|(i, j, r)| SignificantPair {
                    a: corr.names[i].clone(),
                    b: corr.names[j].clone(),
                    r,
                })
                .collect(),
        });
    }
    Ok(report)
}

pub fn activity(
    samples: &[AccelSample],
    window: f64,
    k: Option<usize>,
    seed: u64,
) -> Result<(ActivityReport, Vec<WindowRow>)> {
    let feats = window_features(samples, window).map_err(|e| CliError::input(e.to_string()))?;
    if feats.is_empty() {
        return Err(CliError::input(format!(
            "no window of {window} s holds two or more samples"
        )));
    }
    let load_ranking = load_distribution(&feats)
        .into_iter()
        .map(|(body_location, load)| LoadEntry {
            body_location,
            load,
        })
        .collect();

    let (clusters, assignments) = match k {
        Some(k) => {
            let points: Vec<Vec<f64>> = feats.iter().map(|f| f.vector()).collect();
            let res = kmeans(&points, k, seed).map_err(|e| CliError::input(e.to_string()))?;
            (
                Some(ClusterRecord::new(k, seed, &res)),
                Some(res.assignments),
            )
        }
        None => (None, None),
    };
    let rows = feats
        .iter()
        .enumerate()
        .map(|(i, f)| WindowRow::new(f, assignments.as_ref().map(|a| a[i])))
        .collect();
    Ok((
        ActivityReport {
            window,
            n_windows: feats.len(),
            load_ranking,
            clusters,
        },
        rows,
    ))
}
