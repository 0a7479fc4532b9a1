//! TOML run configuration.
//!
//! ```toml
//! [bands.glucose]
//! lower_normal = 75
//! upper_normal = 200
//! upper_risk = 250
//! confidence = 0.95   # optional, overrides [monitor].confidence
//!
//! [fit]
//! tol = 1e-8
//! max_iter = 200
//! hrrt_fraction = 0.05
//!
//! [monitor]
//! window = 300
//! horizon = 600
//! confidence = 0.95
//!
//! [predictor]
//! min_abs = 0.1
//! alpha = 0.05
//! interactions = false
//!
//! [activity]
//! window = 2.0
//! locations = ["arm_l", "arm_r", "head", "leg_l", "leg_r", "trunk"]
//! ```
//!
//! Every key is optional. Command-line flags win over the file, and the file
//! wins over built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use pphm_core::monitor::{ThresholdBand, DEFAULT_CONFIDENCE};
use pphm_core::recovery::{FitConfig, DEFAULT_HRRT_FRACTION};

use crate::error::{CliError, Result};

pub const DEFAULT_WINDOW: f64 = 300.0;
pub const DEFAULT_HORIZON: f64 = 600.0;
pub const DEFAULT_MIN_ABS: f64 = 0.1;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_ACTIVITY_WINDOW: f64 = 2.0;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSection {
    pub lower_normal: Option<f64>,
    pub upper_normal: Option<f64>,
    pub lower_risk: Option<f64>,
    pub upper_risk: Option<f64>,
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub hrrt_fraction: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSection {
    pub window: Option<f64>,
    pub horizon: Option<f64>,
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictorSection {
    pub min_abs: Option<f64>,
    pub alpha: Option<f64>,
    pub interactions: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivitySection {
    pub window: Option<f64>,
    pub locations: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub bands: BTreeMap<String, BandSection>,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub monitor: MonitorSection,
    #[serde(default)]
    pub predictor: PredictorSection,
    #[serde(default)]
    pub activity: ActivitySection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::input(format!("config {}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load_opt(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

/// Recovery fit settings after merging flags, file and defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub config: FitConfig,
    pub hrrt_fraction: f64,
}

impl FitOptions {
    pub fn resolve(
        file: &FitSection,
        tol: Option<f64>,
        max_iter: Option<usize>,
        hrrt_fraction: Option<f64>,
    ) -> Result<Self> {
        let defaults = FitConfig::default();
        let tol = tol.or(file.tol).unwrap_or(defaults.tol);
        let max_iter = max_iter.or(file.max_iter).unwrap_or(defaults.max_iter);
        let hrrt_fraction = hrrt_fraction
            .or(file.hrrt_fraction)
            .unwrap_or(DEFAULT_HRRT_FRACTION);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::input(format!(
                "--tol must be positive, got {tol}"
            )));
        }
        if max_iter == 0 {
            return Err(CliError::input("--max-iter must be at least 1"));
        }
        if !(hrrt_fraction > 0.0 && hrrt_fraction < 1.0) {
            return Err(CliError::input(format!(
                "--hrrt-fraction must be in (0, 1), got {hrrt_fraction}"
            )));
        }
        Ok(Self {
            config: FitConfig { tol, max_iter },
            hrrt_fraction,
        })
    }
}

/// Monitor settings after merging flags, file and defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorOptions {
    pub window: f64,
    pub horizon: f64,
    pub bands: BTreeMap<String, ThresholdBand>,
}

impl MonitorOptions {
    pub fn resolve(
        file: &FileConfig,
        window: Option<f64>,
        horizon: Option<f64>,
        confidence: Option<f64>,
        extra_bands: &[(String, BandSection)],
    ) -> Result<Self> {
        let window = window.or(file.monitor.window).unwrap_or(DEFAULT_WINDOW);
        let horizon = horizon.or(file.monitor.horizon).unwrap_or(DEFAULT_HORIZON);
        if !(window >= 0.0 && window.is_finite()) {
            return Err(CliError::input(format!(
                "--window must be >= 0, got {window}"
            )));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(CliError::input(format!(
                "--horizon must be > 0, got {horizon}"
            )));
        }
        let mut sections = file.bands.clone();
        for (channel, b) in extra_bands {
            sections.insert(channel.clone(), b.clone());
        }
        let mut bands = BTreeMap::new();
        for (channel, b) in sections {
            let conf = confidence
                .or(b.confidence)
                .or(file.monitor.confidence)
                .unwrap_or(DEFAULT_CONFIDENCE);
            let band = ThresholdBand::new(
                channel.clone(),
                b.lower_normal,
                b.upper_normal,
                b.lower_risk,
                b.upper_risk,
                conf,
            )
            .map_err(|e| CliError::input(format!("band `{channel}`: {e}")))?;
            bands.insert(channel, band);
        }
        Ok(Self {
            window,
            horizon,
            bands,
        })
    }
}

/// Parses `channel=lower_normal,upper_normal,lower_risk,upper_risk`, with
/// empty fields for absent limits, e.g. `glucose=75,200,,250`.
pub fn parse_band_flag(s: &str) -> std::result::Result<(String, BandSection), String> {
    let (channel, rest) = s
        .split_once('=')
        .ok_or_else(|| format!("expected CHANNEL=LN,UN,LR,UR, got `{s}`"))?;
    let fields: Vec<&str> = rest.split(',').collect();
    if fields.len() > 4 || channel.is_empty() {
        return Err(format!("expected CHANNEL=LN,UN,LR,UR, got `{s}`"));
    }
    let mut v = [None; 4];
    for (slot, f) in v.iter_mut().zip(&fields) {
        let f = f.trim();
        if !f.is_empty() {
            *slot = Some(
                f.parse::<f64>()
                    .map_err(|_| format!("`{f}` is not a number"))?,
            );
        }
    }
    Ok((
        channel.to_string(),
        BandSection {
            lower_normal: v[0],
            upper_normal: v[1],
            lower_risk: v[2],
            upper_risk: v[3],
            confidence: None,
        },
    ))
}
