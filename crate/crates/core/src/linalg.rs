//! Dense row-major matrices and Householder QR least squares.

use alloc::vec;
use alloc::vec::Vec;

use libm::{fabs, sqrt};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from row slices of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged row {i}");
            m.data[i * cols..(i + 1) * cols].copy_from_slice(r);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankDeficient {
    pub column: usize,
}

/// Relative threshold on |R_kk| against the largest column norm.
const RANK_TOL: f64 = 1e-10;

/// Solves min ||A x - b||₂ by Householder QR.
///
/// Requires `rows >= cols`. Fails when a diagonal element of R is
/// negligible relative to the largest column norm of A.
pub fn lstsq(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, RankDeficient> {
    let (m, n) = (a.rows, a.cols);
    assert_eq!(b.len(), m);
    assert!(m >= n, "underdetermined system");

    let mut r = a.clone();
    let mut qtb = b.to_vec();

    let max_norm = (0..n)
        .map(|c| sqrt((0..m).map(|i| a.get(i, c) * a.get(i, c)).sum::<f64>()))
        .fold(0.0, f64::max);
    let tol = RANK_TOL * max_norm.max(f64::MIN_POSITIVE);

    let mut v = vec![0.0; m];
    for k in 0..n {
        let norm = sqrt((k..m).map(|i| r.get(i, k) * r.get(i, k)).sum::<f64>());
        if norm <= tol {
            return Err(RankDeficient { column: k });
        }
        let x0 = r.get(k, k);
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        for i in k..m {
            v[i] = r.get(i, k);
        }
        v[k] -= alpha;
        let vnorm2: f64 = (k..m).map(|i| v[i] * v[i]).sum();
        if vnorm2 > 0.0 {
            for c in k..n {
                let dot: f64 = (k..m).map(|i| v[i] * r.get(i, c)).sum();
                let f = 2.0 * dot / vnorm2;
                for i in k..m {
                    let val = r.get(i, c) - f * v[i];
                    r.set(i, c, val);
                }
            }
            let dot: f64 = (k..m).map(|i| v[i] * qtb[i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..m {
                qtb[i] -= f * v[i];
            }
        }
        if fabs(r.get(k, k)) <= tol {
            return Err(RankDeficient { column: k });
        }
    }

    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = ((k + 1)..n).map(|c| r.get(k, c) * x[c]).sum();
        x[k] = (qtb[k] - s) / r.get(k, k);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_square_system() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let x = lstsq(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14);
        assert!((x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn overdetermined_line_fit() {
        // y = 1 + 2t, exactly
        let rows: Vec<Vec<f64>> = (0..10).map(|t| vec![1.0, t as f64]).collect();
        let y: Vec<f64> = (0..10).map(|t| 1.0 + 2.0 * t as f64).collect();
        let x = lstsq(&Matrix::from_rows(&rows), &y).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn detects_collinear_columns() {
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|t| vec![1.0, t as f64, 2.0 * t as f64])
            .collect();
        let err = lstsq(&Matrix::from_rows(&rows), &[0.0; 5]).unwrap_err();
        assert_eq!(err.column, 2);
    }
}
