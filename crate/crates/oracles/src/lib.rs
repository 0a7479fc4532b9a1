//! Reference computations for tests.
//!
//! Nothing here calls into `pphm-core`; each routine takes plain slices and
//! reaches its answer by a different route than the production code
//! (exhaustive search, exact rational arithmetic, textbook closed forms).

#![allow(clippy::needless_range_loop)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

/// Best `(theta, rss)` of `y ≈ c0 + c1·exp(-θ·t)` over a log-spaced grid of
/// θ in `[lo, hi]`, with `(c0, c1)` from the 2×2 normal equations at each θ.
pub fn varpro_grid(t: &[f64], y: &[f64], lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let n = t.len() as f64;
    let sy: f64 = y.iter().sum();
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut best = (f64::NAN, f64::INFINITY);
    let mut e = vec![0.0; t.len()];
    for k in 0..points {
        let theta = (llo + (lhi - llo) * k as f64 / (points - 1) as f64).exp();
        let (mut se, mut see, mut sey) = (0.0, 0.0, 0.0);
        for ((ei, &ti), &yi) in e.iter_mut().zip(t).zip(y) {
            *ei = (-theta * ti).exp();
            se += *ei;
            see += *ei * *ei;
            sey += *ei * yi;
        }
        let det = n * see - se * se;
        if det.abs() < 1e-300 {
            continue;
        }
        let c0 = (see * sy - se * sey) / det;
        let c1 = (n * sey - se * sy) / det;
        let rss: f64 = e
            .iter()
            .zip(y)
            .map(|(ei, yi)| (yi - c0 - c1 * ei).powi(2))
            .sum();
        if rss < best.1 {
            best = (theta, rss);
        }
    }
    best
}

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// Exact least-squares solution of the f64 system `X b ≈ y`, solving the
/// normal equations in rational arithmetic and rounding once at the end.
pub fn exact_lstsq(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len();
    let xr: Vec<Vec<BigRational>> = x
        .iter()
        .map(|r| r.iter().map(|&v| rat(v)).collect())
        .collect();
    let yr: Vec<BigRational> = y.iter().map(|&v| rat(v)).collect();

    // Augmented [XᵀX | Xᵀy]
    let mut a: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); p + 1]; p];
    for (row, yv) in xr.iter().zip(&yr) {
        for i in 0..p {
            if row[i].is_zero() {
                continue;
            }
            for j in i..p {
                let v = &row[i] * &row[j];
                a[i][j] += v;
            }
            let v = &row[i] * yv;
            a[i][p] += v;
        }
    }
    for i in 0..p {
        for j in 0..i {
            a[i][j] = a[j][i].clone();
        }
    }

    for col in 0..p {
        let pivot = (col..p)
            .find(|&r| !a[r][col].is_zero())
            .expect("singular system");
        a.swap(col, pivot);
        let pv = a[col][col].clone();
        for j in col..=p {
            a[col][j] = &a[col][j] / &pv;
        }
        for r in 0..p {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in col..=p {
                    let v = &f * &a[col][j];
                    a[r][j] -= v;
                }
            }
        }
    }
    a.iter()
        .map(|r| r[p].to_f64().expect("representable"))
        .collect()
}

/// Exact population variance of f64 values, rounded once.
pub fn exact_population_variance(values: &[f64]) -> f64 {
    let n = BigRational::from_integer(BigInt::from(values.len()));
    let vals: Vec<BigRational> = values.iter().map(|&v| rat(v)).collect();
    let mean = vals.iter().fold(BigRational::zero(), |acc, v| acc + v) / &n;
    let ss = vals.iter().fold(BigRational::zero(), |acc, v| {
        acc + (v - &mean) * (v - &mean)
    });
    (ss / n).to_f64().unwrap()
}

/// Sample mean and sample standard deviation by two passes.
pub fn mean_std(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Columns z-scored by two-pass sample statistics.
pub fn standardize_columns(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = rows[0].len();
    let mut out = rows.to_vec();
    for c in 0..p {
        let col: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        let (m, s) = mean_std(&col);
        for r in out.iter_mut() {
            r[c] = (r[c] - m) / s;
        }
    }
    out
}

/// Pearson r by two-pass covariance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Two-sided Student-t critical value.
pub fn t_critical(alpha: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .unwrap()
        .inverse_cdf(1.0 - alpha / 2.0)
}

/// Two-sided standard normal critical value.
pub fn z_critical(confidence: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .unwrap()
        .inverse_cdf(0.5 + confidence / 2.0)
}

/// OLS slope and intercept at t = 0 from raw (uncentered) sums.
pub fn ols_uncentered(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for (a, b) in t.iter().zip(y) {
        st += a;
        sy += b;
        stt += a * a;
        sty += a * b;
    }
    let slope = (n * sty - st * sy) / (n * stt - st * st);
    (slope, (sy - slope * st) / n)
}

/// Minimum within-cluster sum of squares over every split into two
/// non-empty groups.
pub fn best_two_partition(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    assert!((2..=20).contains(&n));
    let sse = |members: &[&Vec<f64>]| -> f64 {
        let dim = members[0].len();
        let k = members.len() as f64;
        (0..dim)
            .map(|d| {
                let m = members.iter().map(|p| p[d]).sum::<f64>() / k;
                members.iter().map(|p| (p[d] - m).powi(2)).sum::<f64>()
            })
            .sum()
    };
    let mut best = f64::INFINITY;
    // Fixing the last point on side B enumerates each split once.
    for mask in 1u32..(1 << (n - 1)) {
        let (a, b): (Vec<&Vec<f64>>, Vec<&Vec<f64>>) =
            (0..n)
                .map(|i| (i, &points[i]))
                .fold((vec![], vec![]), |(mut a, mut b), (i, p)| {
                    if (mask >> i) & 1 == 1 {
                        a.push(p)
                    } else {
                        b.push(p)
                    }
                    (a, b)
                });
        best = best.min(sse(&a) + sse(&b));
    }
    best
}

/// Normal-normal posterior `(mean, variance)` after all observations at once.
pub fn batch_posterior(prior_mean: f64, prior_var: f64, obs: &[f64], obs_var: f64) -> (f64, f64) {
    let precision = 1.0 / prior_var + obs.len() as f64 / obs_var;
    let sum: f64 = obs.iter().sum();
    (
        (prior_mean / prior_var + sum / obs_var) / precision,
        1.0 / precision,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_lstsq_line() {
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let y = [1.0, 3.0, 5.0, 7.0, 9.0];
        assert_eq!(exact_lstsq(&x, &y), vec![1.0, 2.0]);
    }

    #[test]
    fn partition_of_two_pairs() {
        let p = vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]];
        assert_eq!(best_two_partition(&p), 1.0);
    }

    #[test]
    fn grid_finds_generator() {
        let t: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let y: Vec<f64> = t.iter().map(|&t| 60.0 + 100.0 * (-0.1 * t).exp()).collect();
        let (theta, rss) = varpro_grid(&t, &y, 1e-3, 1.0, 3001);
        assert!((theta - 0.1).abs() < 1e-3);
        assert!(rss < 1e-6);
    }
}
