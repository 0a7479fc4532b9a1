//! Numerics for personnel health monitoring.
//!
//! - [`recovery`]: heart-rate recovery curve fitting and recovery time.
//! - [`monitor`]: normal/abnormal/risk zones, trend forecasts and alerts.
//! - [`predictor`]: standardized regression, predictor ranking, correlation
//!   screening and sequential Bayesian mean estimation.
//! - [`activity`]: accelerometer window features, load ranking and k-means.
//! - [`simgen`]: seeded synthetic datasets.
//!
//! The crate is `no_std` and needs only `alloc`. File formats and the
//! command-line tool live in the `pphm` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod activity;
pub mod linalg;
pub mod model;
pub mod monitor;
pub mod predictor;
pub mod recovery;
pub mod rng;
pub mod simgen;
pub mod special;

pub use model::{
    validate_series, BiomarkerRole, BiomarkerSample, BiomarkerSeries, SeriesError, SubjectProfile,
};
