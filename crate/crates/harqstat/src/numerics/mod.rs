//! Deterministic linear-algebra and distribution kernel shared by the
//! statistical modules.
//!
//! Everything here is a pure function of its inputs; matrices are dense,
//! row-major and small (the record dimension is 4(m+1) <= a few dozen while
//! the number of records n can be large).

pub mod special;

use crate::error::{Error, Result};

pub use special::{chi2_sf, chi2_sf_real, normal_quantile, normal_sf};

/// Dense real matrix, row-major. `rows >= 1`, `cols >= 1`, all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {rows}x{cols}={} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(RealMatrix { rows, cols, data })
    }

    /// Builds a matrix whose columns are the given equal-length vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Dimension("no columns given".into()));
        }
        let rows = columns[0].len();
        if rows == 0 {
            return Err(Error::Dimension("columns must be non-empty".into()));
        }
        let cols = columns.len();
        let mut data = vec![0.0; rows * cols];
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::Dimension(format!(
                    "column {j} has length {}, expected {rows}",
                    col.len()
                )));
            }
            for (i, &v) in col.iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        Self::from_vec(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        RealMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
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

    /// Slice view of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Sum of squared entries over a contiguous row range (`lo..hi`).
    pub fn row_block_sum_sq(&self, lo: usize, hi: usize) -> f64 {
        self.data[lo * self.cols..hi * self.cols]
            .iter()
            .map(|v| v * v)
            .sum()
    }

    /// Sum of entries over a contiguous row range.
    pub fn row_block_sum(&self, lo: usize, hi: usize) -> f64 {
        self.data[lo * self.cols..hi * self.cols].iter().sum()
    }

    /// Sum of squared deviations from `center` over a contiguous row range.
    pub fn row_block_sum_sq_dev(&self, lo: usize, hi: usize, center: f64) -> f64 {
        self.data[lo * self.cols..hi * self.cols]
            .iter()
            .map(|v| {
                let d = v - center;
                d * d
            })
            .sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Per-row arithmetic mean: component d is the mean of row d over all columns.
pub fn sample_mean(x: &RealMatrix) -> Vec<f64> {
    let n = x.cols() as f64;
    (0..x.rows())
        .map(|r| x.row(r).iter().sum::<f64>() / n)
        .collect()
}

/// Maximum-likelihood covariance with divisor n (not n-1):
/// S = (1/n) (X - mean 1^T)(X - mean 1^T)^T.
pub fn sample_covariance_ml(x: &RealMatrix) -> Result<RealMatrix> {
    let n = x.cols();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "covariance needs at least 2 columns, got {n}"
        )));
    }
    let d = x.rows();
    let mean = sample_mean(x);
    let mut cov = RealMatrix::zeros(d, d);
    for a in 0..d {
        let ra = x.row(a);
        let ma = mean[a];
        for b in a..d {
            let rb = x.row(b);
            let mb = mean[b];
            let mut acc = 0.0;
            for k in 0..n {
                acc += (ra[k] - ma) * (rb[k] - mb);
            }
            let v = acc / n as f64;
            cov.set(a, b, v);
            cov.set(b, a, v);
        }
    }
    Ok(cov)
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix,
/// with the log-determinant of the factored matrix.
#[derive(Debug, Clone)]
pub struct SpdFactorization {
    dim: usize,
    /// Row-major dense lower-triangular factor (upper part zero).
    lower: Vec<f64>,
    log_det: f64,
}

impl SpdFactorization {
    /// Factors `a = L L^T`. Fails with a singularity error when a pivot is
    /// not strictly positive, leaving the fallback decision to the caller.
    pub fn cholesky(a: &RealMatrix) -> Result<Self> {
        let d = a.rows();
        if a.cols() != d {
            return Err(Error::Dimension(format!(
                "cholesky needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if !a.is_symmetric(1e-8 * (1.0 + max_abs(a))) {
            return Err(Error::NotPositiveDefinite("matrix is not symmetric".into()));
        }
        let mut l = vec![0.0f64; d * d];
        let mut log_det = 0.0;
        for i in 0..d {
            for j in 0..=i {
                let mut sum = a.get(i, j);
                for k in 0..j {
                    sum -= l[i * d + k] * l[j * d + k];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(Error::NotPositiveDefinite(format!(
                            "pivot {i} is {sum:e}"
                        )));
                    }
                    let root = sum.sqrt();
                    l[i * d + i] = root;
                    log_det += 2.0 * root.ln();
                } else {
                    l[i * d + j] = sum / l[j * d + j];
                }
            }
        }
        Ok(SpdFactorization {
            dim: d,
            lower: l,
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    #[inline]
    pub fn lower(&self, r: usize, c: usize) -> f64 {
        self.lower[r * self.dim + c]
    }

    /// Solves L y = b in place (forward substitution). The result is the
    /// standardized vector used by Mahalanobis-type statistics:
    /// ||y||^2 = b^T A^{-1} b.
    pub fn forward_substitute(&self, b: &mut [f64]) {
        let d = self.dim;
        debug_assert_eq!(b.len(), d);
        for i in 0..d {
            let mut v = b[i];
            for k in 0..i {
                v -= self.lower[i * d + k] * b[k];
            }
            b[i] = v / self.lower[i * d + i];
        }
    }

    /// Solves A x = b via L then L^T.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut y = b.to_vec();
        self.forward_substitute(&mut y);
        for i in (0..d).rev() {
            let mut v = y[i];
            for k in (i + 1)..d {
                v -= self.lower[k * d + i] * y[k];
            }
            y[i] = v / self.lower[i * d + i];
        }
        y
    }

    /// Quadratic form b^T A^{-1} b.
    pub fn inv_quadratic_form(&self, b: &[f64]) -> f64 {
        let mut y = b.to_vec();
        self.forward_substitute(&mut y);
        y.iter().map(|v| v * v).sum()
    }
}

/// ln det A for symmetric positive-definite A, via Cholesky:
/// 2 * sum of logs of the factor diagonal.
pub fn log_det_spd(a: &RealMatrix) -> Result<f64> {
    Ok(SpdFactorization::cholesky(a)?.log_det())
}

fn max_abs(a: &RealMatrix) -> f64 {
    a.data().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
