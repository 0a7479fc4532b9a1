//! Standardized multiple regression of a target indicator on biomarker
//! factors, predictor ranking, correlation screening and a conjugate
//! normal update for sequential mean estimation.
//!
//! Factors are z-scored (sample standard deviation) while the target stays
//! in its own units, so a coefficient reads as "change in the target per
//! standard deviation of the factor". Large |bᵢ| marks factor i as a
//! predictor.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::{fabs, sqrt};
use thiserror::Error;

use crate::linalg::{lstsq, Matrix};
use crate::special::{student_t_quantile, student_t_two_sided_p};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PredictorError {
    #[error("factor `{0}` has zero variance")]
    ZeroVarianceFactor(String),
    #[error("design matrix is rank deficient at term `{0}`")]
    RankDeficientDesign(String),
    #[error("{have} observations are too few; need at least {need}")]
    TooFewObservations { have: usize, need: usize },
    #[error("duplicate factor name `{0}`")]
    DuplicateName(String),
    #[error("row {row} has {found} values, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
}

/// Observations of n factors and one target indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    factor_names: Vec<String>,
    factors: Matrix,
    target: Vec<f64>,
}

impl FactorMatrix {
    pub fn new(
        factor_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        target: Vec<f64>,
    ) -> Result<Self, PredictorError> {
        let n = factor_names.len();
        let m = rows.len();
        for (i, name) in factor_names.iter().enumerate() {
            if factor_names[..i].contains(name) {
                return Err(PredictorError::DuplicateName(name.clone()));
            }
        }
        if m < n + 2 || target.len() != m {
            return Err(PredictorError::TooFewObservations {
                have: m.min(target.len()),
                need: n + 2,
            });
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(PredictorError::RaggedRow {
                    row: r,
                    found: row.len(),
                    expected: n,
                });
            }
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(PredictorError::NonFinite { row: r, col: c });
            }
            if !target[r].is_finite() {
                return Err(PredictorError::NonFinite { row: r, col: n });
            }
        }
        Ok(Self {
            factor_names,
            factors: Matrix::from_rows(&rows),
            target,
        })
    }

    pub fn factor_names(&self) -> &[String] {
        &self.factor_names
    }

    pub fn n_obs(&self) -> usize {
        self.target.len()
    }

    pub fn n_factors(&self) -> usize {
        self.factor_names.len()
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.factors.column(c)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        self.factors.row(r)
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Copy with factor column `c` multiplied by `k`.
    pub fn with_scaled_column(&self, c: usize, k: f64) -> Self {
        let mut out = self.clone();
        for r in 0..out.factors.rows() {
            let v = out.factors.get(r, c) * k;
            out.factors.set(r, c, v);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    /// m × n z-scores.
    pub z: Matrix,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

fn mean_std(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, sqrt(ss / (n - 1.0)))
}

/// Z-scores every factor column with its sample mean and sample standard
/// deviation.
pub fn standardize(matrix: &FactorMatrix) -> Result<Standardized, PredictorError> {
    let (m, n) = (matrix.n_obs(), matrix.n_factors());
    let mut z = Matrix::zeros(m, n);
    let mut means = Vec::with_capacity(n);
    let mut stds = Vec::with_capacity(n);
    for c in 0..n {
        let col = matrix.column(c);
        let (mean, std) = mean_std(&col);
        if !(std > 0.0) {
            return Err(PredictorError::ZeroVarianceFactor(
                matrix.factor_names[c].clone(),
            ));
        }
        for (r, v) in col.iter().enumerate() {
            z.set(r, c, (v - mean) / std);
        }
        means.push(mean);
        stds.push(std);
    }
    Ok(Standardized { z, means, stds })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FitOptions {
    /// Add pairwise products zᵢ·zⱼ (i < j) as extra terms.
    pub interactions: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorReport {
    /// Term names: factors, then `a*b` interaction terms.
    pub terms: Vec<String>,
    pub coefficients_standardized: Vec<f64>,
    /// Target value at the factor means, in target units.
    pub intercept: f64,
    pub r_squared: f64,
    /// Terms by |b| descending, ties by name.
    pub ranking: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub n_obs: usize,
}

impl PredictorReport {
    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.terms
            .iter()
            .position(|t| t == term)
            .map(|i| self.coefficients_standardized[i])
    }
}

/// Design columns `[1, z₁ … zₙ, (zᵢ·zⱼ)ᵢ<ⱼ]` and their names.
pub fn design_matrix(z: &Matrix, names: &[String], options: FitOptions) -> (Matrix, Vec<String>) {
    let (m, n) = (z.rows(), z.cols());
    let mut terms: Vec<String> = names.to_vec();
    let mut pairs = Vec::new();
    if options.interactions {
        for i in 0..n {
            for j in (i + 1)..n {
                pairs.push((i, j));
                terms.push(format!("{}*{}", names[i], names[j]));
            }
        }
    }
    let p = 1 + n + pairs.len();
    let mut x = Matrix::zeros(m, p);
    for r in 0..m {
        x.set(r, 0, 1.0);
        for c in 0..n {
            x.set(r, 1 + c, z.get(r, c));
        }
        for (k, &(i, j)) in pairs.iter().enumerate() {
            x.set(r, 1 + n + k, z.get(r, i) * z.get(r, j));
        }
    }
    (x, terms)
}

fn rank_terms(terms: &[String], coefs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..terms.len()).collect();
    order.sort_by(|&a, &b| {
        fabs(coefs[b])
            .total_cmp(&fabs(coefs[a]))
            .then_with(|| terms[a].cmp(&terms[b]))
    });
    order
}

/// Least-squares fit on standardized factors via Householder QR.
pub fn fit_linear(
    matrix: &FactorMatrix,
    options: FitOptions,
) -> Result<PredictorReport, PredictorError> {
    let std = standardize(matrix)?;
    let (x, terms) = design_matrix(&std.z, &matrix.factor_names, options);
    let m = matrix.n_obs();
    let need = x.cols() + 1;
    if m < need {
        return Err(PredictorError::TooFewObservations { have: m, need });
    }

    let beta = lstsq(&x, &matrix.target).map_err(|e| {
        let name = if e.column == 0 {
            String::from("intercept")
        } else {
            terms[e.column - 1].clone()
        };
        PredictorError::RankDeficientDesign(name)
    })?;

    let fitted = x.mul_vec(&beta);
    let y_mean = matrix.target.iter().sum::<f64>() / m as f64;
    let (mut rss, mut tss) = (0.0, 0.0);
    for (y, f) in matrix.target.iter().zip(&fitted) {
        rss += (y - f) * (y - f);
        tss += (y - y_mean) * (y - y_mean);
    }
    let r_squared = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        1.0
    };

    let coefs = beta[1..].to_vec();
    let ranking = rank_terms(&terms, &coefs)
        .into_iter()
        .map(|i| terms[i].clone())
        .collect();

    Ok(PredictorReport {
        terms,
        coefficients_standardized: coefs,
        intercept: beta[0],
        r_squared,
        ranking,
        means: std.means,
        stds: std.stds,
        n_obs: m,
    })
}

/// Terms with |bᵢ| ≥ `min_abs`, strongest first, ties broken by name.
pub fn rank_predictors(report: &PredictorReport, min_abs: f64) -> Vec<(String, f64)> {
    rank_terms(&report.terms, &report.coefficients_standardized)
        .into_iter()
        .map(|i| (report.terms[i].clone(), report.coefficients_standardized[i]))
        .filter(|(_, b)| fabs(*b) >= min_abs)
        .collect()
}

/// Symmetric Pearson correlation matrix with named rows/columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Matrix,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Pearson correlations of the factors, and optionally the target as the
/// last column.
///
/// Co-moments accumulate in a single pass with Welford updates.
pub fn correlation_matrix(
    matrix: &FactorMatrix,
    include_target: bool,
    target_name: &str,
) -> Result<CorrelationMatrix, PredictorError> {
    let mut names = matrix.factor_names.clone();
    let mut cols: Vec<Vec<f64>> = (0..matrix.n_factors()).map(|c| matrix.column(c)).collect();
    if include_target {
        names.push(String::from(target_name));
        cols.push(matrix.target.clone());
    }
    let k = cols.len();
    let m = matrix.n_obs();

    let mut mean = vec![0.0; k];
    let mut comoment = Matrix::zeros(k, k);
    let mut delta = vec![0.0; k];
    for r in 0..m {
        let w = (r + 1) as f64;
        for c in 0..k {
            delta[c] = cols[c][r] - mean[c];
            mean[c] += delta[c] / w;
        }
        for i in 0..k {
            let after_i = cols[i][r] - mean[i];
            for j in i..k {
                let v = comoment.get(i, j) + delta[j] * after_i;
                comoment.set(i, j, v);
            }
        }
    }

    for (c, name) in names.iter().enumerate() {
        if !(comoment.get(c, c) > 0.0) {
            return Err(PredictorError::ZeroVarianceFactor(name.clone()));
        }
    }

    let mut values = Matrix::zeros(k, k);
    for i in 0..k {
        values.set(i, i, 1.0);
        for j in (i + 1)..k {
            let r = comoment.get(i, j) / sqrt(comoment.get(i, i) * comoment.get(j, j));
            let r = r.clamp(-1.0, 1.0);
            values.set(i, j, r);
            values.set(j, i, r);
        }
    }
    Ok(CorrelationMatrix { names, values })
}

/// Two-sided Student-t critical value for a correlation test.
pub fn t_critical(alpha: f64, df: f64) -> f64 {
    student_t_quantile(1.0 - alpha / 2.0, df)
}

/// Off-diagonal pairs `(i, j, r)`, `i < j`, whose t statistic
/// `|r|·sqrt((m-2)/(1-r²))` exceeds the two-sided critical value at `alpha`.
pub fn significant_correlations(
    corr: &CorrelationMatrix,
    m: usize,
    alpha: f64,
) -> Result<Vec<(usize, usize, f64)>, PredictorError> {
    if m < 4 {
        return Err(PredictorError::TooFewObservations { have: m, need: 4 });
    }
    let df = (m - 2) as f64;
    let mut out = Vec::new();
    for i in 0..corr.len() {
        for j in (i + 1)..corr.len() {
            let r = corr.get(i, j);
            let significant = if fabs(r) >= 1.0 {
                true
            } else {
                let t = fabs(r) * sqrt(df / (1.0 - r * r));
                student_t_two_sided_p(t, df) < alpha
            };
            if significant {
                out.push((i, j, r));
            }
        }
    }
    Ok(out)
}

/// Normal posterior over an unknown mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequentialEstimate {
    pub mean: f64,
    variance: f64,
    pub n_obs: usize,
}

impl SequentialEstimate {
    pub fn new(mean: f64, variance: f64) -> Result<Self, PredictorError> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(PredictorError::NonPositiveVariance(variance));
        }
        Ok(Self {
            mean,
            variance,
            n_obs: 0,
        })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// Conjugate normal-normal update with known observation variance.
pub fn sequential_update(
    prior: &SequentialEstimate,
    observation: f64,
    obs_variance: f64,
) -> Result<SequentialEstimate, PredictorError> {
    if !(obs_variance > 0.0) {
        return Err(PredictorError::NonPositiveVariance(obs_variance));
    }
    let prior_precision = 1.0 / prior.variance;
    let obs_precision = 1.0 / obs_variance;
    let precision = prior_precision + obs_precision;
    Ok(SequentialEstimate {
        mean: (prior.mean * prior_precision + observation * obs_precision) / precision,
        variance: 1.0 / precision,
        n_obs: prior.n_obs + 1,
    })
}
