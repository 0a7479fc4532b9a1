//! Domain types shared by every analysis module.
//!
//! Times are relative seconds from the origin of a series. Values are in
//! the channel's units, which are carried as opaque labels.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

/// A single time-stamped scalar measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct BiomarkerSample {
    pub subject_id: String,
    pub channel: String,
    /// Seconds relative to the series origin.
    pub t: f64,
    pub value: f64,
    pub unit: String,
}

impl BiomarkerSample {
    pub fn new(
        subject_id: impl Into<String>,
        channel: impl Into<String>,
        t: f64,
        value: f64,
        unit: impl Into<String>,
    ) -> Self {
        Self {
            subject_id: subject_id.into(),
            channel: channel.into(),
            t,
            value,
            unit: unit.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("series is empty")]
    EmptySeries,
    #[error("duplicate timestamp t={0}")]
    DuplicateTimestamp(f64),
    #[error("mixed channels: expected `{expected}`, found `{found}`")]
    MixedChannel { expected: String, found: String },
    #[error("mixed subjects: expected `{expected}`, found `{found}`")]
    MixedSubject { expected: String, found: String },
    #[error("mixed units: expected `{expected}`, found `{found}`")]
    MixedUnit { expected: String, found: String },
    #[error("non-finite or negative time/value at sample index {0}")]
    NonFiniteValue(usize),
}

/// A validated, strictly time-ordered run of samples for one subject and
/// one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct BiomarkerSeries {
    subject_id: String,
    channel: String,
    samples: Vec<BiomarkerSample>,
}

impl BiomarkerSeries {
    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn channel(&self) -> &str {
        &self.channel
    }

    pub fn unit(&self) -> &str {
        &self.samples[0].unit
    }

    pub fn samples(&self) -> &[BiomarkerSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; a validated series holds at least one sample.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.value).collect()
    }

    pub fn first(&self) -> &BiomarkerSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &BiomarkerSample {
        &self.samples[self.samples.len() - 1]
    }

    /// Prefix of the first `n` samples, used for in-order replay.
    pub fn prefix(&self, n: usize) -> Option<BiomarkerSeries> {
        if n == 0 || n > self.samples.len() {
            return None;
        }
        Some(BiomarkerSeries {
            subject_id: self.subject_id.clone(),
            channel: self.channel.clone(),
            samples: self.samples[..n].to_vec(),
        })
    }

    pub fn into_samples(self) -> Vec<BiomarkerSample> {
        self.samples
    }
}

/// Sorts and checks raw samples, producing a series.
///
/// Rejects empty input, non-finite or negative times, non-finite values,
/// repeated timestamps and samples that disagree on subject, channel or
/// unit. Sorting is stable so the result does not depend on how equal
/// keys were ordered (equal keys are rejected anyway).
pub fn validate_series(raw: Vec<BiomarkerSample>) -> Result<BiomarkerSeries, SeriesError> {
    let Some(head) = raw.first() else {
        return Err(SeriesError::EmptySeries);
    };
    let subject_id = head.subject_id.clone();
    let channel = head.channel.clone();
    let unit = head.unit.clone();

    for (i, s) in raw.iter().enumerate() {
        if !s.t.is_finite() || s.t < 0.0 || !s.value.is_finite() {
            return Err(SeriesError::NonFiniteValue(i));
        }
        if s.channel != channel {
            return Err(SeriesError::MixedChannel {
                expected: channel,
                found: s.channel.clone(),
            });
        }
        if s.subject_id != subject_id {
            return Err(SeriesError::MixedSubject {
                expected: subject_id,
                found: s.subject_id.clone(),
            });
        }
        if s.unit != unit {
            return Err(SeriesError::MixedUnit {
                expected: unit,
                found: s.unit.clone(),
            });
        }
    }

    let mut samples = raw;
    samples.sort_by(|x, y| x.t.total_cmp(&y.t));
    if let Some(w) = samples.windows(2).find(|w| w[0].t == w[1].t) {
        return Err(SeriesError::DuplicateTimestamp(w[0].t));
    }

    Ok(BiomarkerSeries {
        subject_id,
        channel,
        samples,
    })
}

/// Per-subject factors such as age, fitness score or environment descriptors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubjectProfile {
    pub subject_id: String,
    covariates: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("covariate `{0}` is not finite")]
pub struct NonFiniteCovariate(pub String);

impl SubjectProfile {
    pub fn new(subject_id: impl Into<String>) -> Self {
        Self {
            subject_id: subject_id.into(),
            covariates: BTreeMap::new(),
        }
    }

    pub fn with_covariate(
        mut self,
        name: impl Into<String>,
        value: f64,
    ) -> Result<Self, NonFiniteCovariate> {
        let name = name.into();
        if !value.is_finite() {
            return Err(NonFiniteCovariate(name));
        }
        self.covariates.insert(name, value);
        Ok(self)
    }

    pub fn covariate(&self, name: &str) -> Option<f64> {
        self.covariates.get(name).copied()
    }

    pub fn covariates(&self) -> &BTreeMap<String, f64> {
        &self.covariates
    }
}

/// Descriptive tag for what a biomarker is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BiomarkerRole {
    Preventive,
    Verificatory,
    Explorative,
    State,
    Prognostic,
    Pharmacodynamic,
}

impl BiomarkerRole {
    pub const ALL: [BiomarkerRole; 6] = [
        BiomarkerRole::Preventive,
        BiomarkerRole::Verificatory,
        BiomarkerRole::Explorative,
        BiomarkerRole::State,
        BiomarkerRole::Prognostic,
        BiomarkerRole::Pharmacodynamic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BiomarkerRole::Preventive => "preventive",
            BiomarkerRole::Verificatory => "verificatory",
            BiomarkerRole::Explorative => "explorative",
            BiomarkerRole::State => "state",
            BiomarkerRole::Prognostic => "prognostic",
            BiomarkerRole::Pharmacodynamic => "pharmacodynamic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.as_str() == s)
    }
}
