//! Test 1: multivariate-normality checks over dataset records — Mardia's
//! skewness and kurtosis, Henze-Zirkler, and Royston, implemented from the
//! primary literature definitions with constants locked by fixture tests
//! against an independent implementation.

pub mod royston;

use crate::error::{Error, Result};
use crate::harqgen::PosteriorDataset;
use crate::numerics::{
    chi2_sf_real, normal_sf, sample_covariance_ml, sample_mean, RealMatrix, SpdFactorization,
};

pub use royston::royston;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Reject,
    Accept,
}

impl Decision {
    pub fn as_str(&self) -> &'static str {
        match self {
            Decision::Reject => "reject",
            Decision::Accept => "accept",
        }
    }
}

/// One hypothesis-test outcome. `decision` is `Reject` iff `p_value < alpha`.
/// `dof` is real-valued to carry Royston's equivalent degrees of freedom;
/// tests against the standard normal have no dof.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    pub dof: Option<f64>,
    pub p_value: f64,
    pub alpha: f64,
    pub decision: Decision,
    pub warnings: Vec<String>,
}

impl TestReport {
    pub fn new(test: &str, statistic: f64, dof: Option<f64>, p_value: f64, alpha: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&p_value), "p={p_value}");
        TestReport {
            test: test.to_string(),
            statistic,
            dof,
            p_value,
            alpha,
            decision: if p_value < alpha {
                Decision::Reject
            } else {
                Decision::Accept
            },
            warnings: Vec::new(),
        }
    }

    pub fn with_warning(mut self, warning: String) -> Self {
        self.warnings.push(warning);
        self
    }
}

/// Columns standardized by the ML covariance: y_i = L^{-1}(x_i - mean) with
/// S = L L^T. Column-major flat storage (column i at ys[i*d..(i+1)*d]).
pub(crate) struct Standardized {
    pub d: usize,
    pub n: usize,
    pub ys: Vec<f64>,
}

pub(crate) fn standardize(x: &RealMatrix) -> Result<Standardized> {
    let d = x.rows();
    let n = x.cols();
    if n <= d {
        return Err(Error::InsufficientData(format!(
            "need n > d, got n={n}, d={d}"
        )));
    }
    let mean = sample_mean(x);
    let cov = sample_covariance_ml(x)?;
    let chol = SpdFactorization::cholesky(&cov).map_err(|_| {
        Error::DegenerateData("sample covariance is singular or indefinite".into())
    })?;
    let mut ys = vec![0.0; d * n];
    let mut buf = vec![0.0; d];
    for i in 0..n {
        for (a, b) in buf.iter_mut().enumerate() {
            *b = x.get(a, i) - mean[a];
        }
        chol.forward_substitute(&mut buf);
        ys[i * d..(i + 1) * d].copy_from_slice(&buf);
    }
    Ok(Standardized { d, n, ys })
}

/// Mardia's multivariate skewness and kurtosis tests.
///
/// Skewness: b1 = (1/n^2) sum_{ij} (y_i . y_j)^3 over standardized records,
/// statistic n b1 / 6 against chi-squared with d(d+1)(d+2)/6 dof. Computed
/// through the third-moment tensor T_abc = sum_i y_a y_b y_c (so b1 =
/// ||T||^2/n^2) to avoid the O(n^2) double sum.
///
/// Kurtosis: b2 = (1/n) sum_i |y_i|^4, statistic
/// (b2 - d(d+2)) / sqrt(8 d (d+2) / n), two-sided against N(0,1).
pub fn mardia(x: &RealMatrix, alpha: f64) -> Result<(TestReport, TestReport)> {
    let st = standardize(x)?;
    let (d, n) = (st.d, st.n);
    let nf = n as f64;
    let df = d as f64;

    let mut tensor = vec![0.0f64; d * d * d];
    let mut b2 = 0.0;
    for i in 0..n {
        let y = &st.ys[i * d..(i + 1) * d];
        let norm_sq: f64 = y.iter().map(|v| v * v).sum();
        b2 += norm_sq * norm_sq;
        for a in 0..d {
            let ya = y[a];
            for b in 0..d {
                let yab = ya * y[b];
                let row = &mut tensor[(a * d + b) * d..(a * d + b + 1) * d];
                for (t, &yc) in row.iter_mut().zip(y) {
                    *t += yab * yc;
                }
            }
        }
    }
    let b1: f64 = tensor.iter().map(|t| t * t).sum::<f64>() / (nf * nf);
    b2 /= nf;

    let skew_stat = nf * b1 / 6.0;
    let skew_dof = df * (df + 1.0) * (df + 2.0) / 6.0;
    let skew_p = chi2_sf_real(skew_stat, skew_dof)?;
    let skew = TestReport::new("Mardia-skew", skew_stat, Some(skew_dof), skew_p, alpha);

    let kurt_stat = (b2 - df * (df + 2.0)) / (8.0 * df * (df + 2.0) / nf).sqrt();
    let kurt_p = 2.0 * normal_sf(kurt_stat.abs());
    let kurt = TestReport::new("Mardia-kurt", kurt_stat, None, kurt_p, alpha);
    Ok((skew, kurt))
}

/// Henze-Zirkler test with the standard smoothing parameter
/// b = 2^{-1/2} ((2d+1) n / 4)^{1/(d+4)}.
///
/// Statistic over standardized records:
/// T = n [ (1/n^2) sum_{ij} exp(-b^2 |y_i-y_j|^2 / 2)
///       - 2 (1+b^2)^{-d/2} (1/n) sum_i exp(-b^2 |y_i|^2 / (2(1+b^2)))
///       + (1+2b^2)^{-d/2} ].
///
/// Null approximation (lognormal), recorded verbatim from the published
/// moments with a = 1 + 2b^2 and w = (1+b^2)(1+3b^2):
///   mu  = 1 - a^{-d/2} (1 + d b^2/a + d(d+2) b^4 / (2 a^2))
///   si2 = 2 (1+4b^2)^{-d/2}
///       + 2 a^{-d} (1 + 2 d b^4 / a^2 + 3 d (d+2) b^8 / (4 a^4))
///       - 4 w^{-d/2} (1 + 3 d b^4 / (2 w) + d (d+2) b^8 / (2 w^2))
///   pmu = ln sqrt(mu^4 / (si2 + mu^2)),  psi = sqrt(ln((si2 + mu^2)/mu^2))
///   p   = P(N(0,1) > (ln T - pmu) / psi).
pub fn henze_zirkler(x: &RealMatrix, alpha: f64) -> Result<TestReport> {
    use rayon::prelude::*;
    let st = standardize(x)?;
    let (d, n) = (st.d, st.n);
    let (df, nf) = (d as f64, n as f64);
    let b = (1.0 / 2.0f64.sqrt()) * ((2.0 * df + 1.0) * nf / 4.0).powf(1.0 / (df + 4.0));
    let b2 = b * b;

    let norms_sq: Vec<f64> = (0..n)
        .map(|i| st.ys[i * d..(i + 1) * d].iter().map(|v| v * v).sum())
        .collect();
    // Pairwise term: diagonal contributes exp(0) = 1 per record. Per-row
    // partial sums are collected in order and reduced sequentially so the
    // result does not depend on thread scheduling.
    let row_sums: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let yi = &st.ys[i * d..(i + 1) * d];
            let mut acc = 0.0;
            for j in (i + 1)..n {
                let yj = &st.ys[j * d..(j + 1) * d];
                let dist_sq = norms_sq[i] + norms_sq[j]
                    - 2.0 * yi.iter().zip(yj).map(|(a, b)| a * b).sum::<f64>();
                acc += (-0.5 * b2 * dist_sq.max(0.0)).exp();
            }
            acc
        })
        .collect();
    let pair_sum: f64 = nf + 2.0 * row_sums.iter().sum::<f64>();
    let near_sum: f64 = norms_sq
        .iter()
        .map(|&sq| (-b2 * sq / (2.0 * (1.0 + b2))).exp())
        .sum();
    let statistic = nf
        * (pair_sum / (nf * nf) - 2.0 * (1.0 + b2).powf(-df / 2.0) * near_sum / nf
            + (1.0 + 2.0 * b2).powf(-df / 2.0));

    let a = 1.0 + 2.0 * b2;
    let w = (1.0 + b2) * (1.0 + 3.0 * b2);
    let b4 = b2 * b2;
    let b8 = b4 * b4;
    let mu = 1.0 - a.powf(-df / 2.0) * (1.0 + df * b2 / a + df * (df + 2.0) * b4 / (2.0 * a * a));
    let si2 = 2.0 * (1.0 + 4.0 * b2).powf(-df / 2.0)
        + 2.0 * a.powf(-df)
            * (1.0 + 2.0 * df * b4 / (a * a) + 3.0 * df * (df + 2.0) * b8 / (4.0 * a.powi(4)))
        - 4.0 * w.powf(-df / 2.0)
            * (1.0 + 3.0 * df * b4 / (2.0 * w) + df * (df + 2.0) * b8 / (2.0 * w * w));
    let pmu = (mu.powi(4) / (si2 + mu * mu)).sqrt().ln();
    let psi = ((si2 + mu * mu) / (mu * mu)).ln().sqrt();
    let p = normal_sf((statistic.ln() - pmu) / psi);
    Ok(TestReport::new("HZ", statistic, None, p, alpha))
}

/// Runs all Test-1 checks over a dataset, in the fixed report order
/// Mardia-skew, Mardia-kurt, HZ, Royston.
pub fn test1_suite(dataset: &PosteriorDataset, alpha: f64) -> Result<Vec<TestReport>> {
    dataset.validate()?;
    let (skew, kurt) = mardia(&dataset.x, alpha)?;
    let hz = henze_zirkler(&dataset.x, alpha)?;
    let roy = royston(&dataset.x, alpha)?;
    Ok(vec![skew, kurt, hz, roy])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::SeededRng;

    pub(crate) fn mvn_matrix(d: usize, n: usize, seed: u64) -> RealMatrix {
        let mut rng = SeededRng::new(seed, 0);
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.standard_normal()).collect())
            .collect();
        RealMatrix::from_columns(&cols).unwrap()
    }

    #[test]
    fn mardia_null_draws_accept() {
        let x = mvn_matrix(4, 2000, 31);
        let (skew, kurt) = mardia(&x, 0.01).unwrap();
        assert_eq!(skew.decision, Decision::Accept, "p={}", skew.p_value);
        assert_eq!(kurt.decision, Decision::Accept, "p={}", kurt.p_value);
    }

    #[test]
    fn mardia_detects_cubed_coordinate() {
        // One coordinate cubed: strong skew.
        let mut x = mvn_matrix(4, 10_000, 32);
        let mut cube = x.clone();
        for c in 0..x.cols() {
            let v = x.get(0, c);
            cube.set(0, c, v * v * v);
        }
        x = cube;
        let (skew, _) = mardia(&x, 0.01).unwrap();
        assert!(skew.p_value < 1e-4, "p={}", skew.p_value);
        assert_eq!(skew.decision, Decision::Reject);
    }

    #[test]
    fn mardia_antisymmetric_dataset_has_zero_skewness() {
        // Columns come in exact +/- pairs: every third moment cancels.
        let v1 = vec![1.0, 0.3];
        let v2 = vec![-0.2, 1.1];
        let mut cols = Vec::new();
        for _ in 0..25 {
            cols.push(v1.clone());
            cols.push(v1.iter().map(|x| -x).collect());
            cols.push(v2.clone());
            cols.push(v2.iter().map(|x| -x).collect());
        }
        let x = RealMatrix::from_columns(&cols).unwrap();
        let (skew, _) = mardia(&x, 0.01).unwrap();
        assert_eq!(skew.statistic, 0.0);
        assert_eq!(skew.p_value, 1.0);
    }

    #[test]
    fn mardia_rejects_singular_data() {
        // Rank-1 data in d=2.
        let cols: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let x = RealMatrix::from_columns(&cols).unwrap();
        assert!(matches!(
            mardia(&x, 0.01),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn hz_accepts_null_and_rejects_uniform_cube() {
        let x = mvn_matrix(4, 2000, 33);
        let hz = henze_zirkler(&x, 0.05).unwrap();
        assert_eq!(hz.decision, Decision::Accept, "p={}", hz.p_value);

        let mut rng = SeededRng::new(34, 0);
        let cube: Vec<Vec<f64>> = (0..2000)
            .map(|_| (0..4).map(|_| rng.uniform() - 0.5).collect())
            .collect();
        let xc = RealMatrix::from_columns(&cube).unwrap();
        let hz = henze_zirkler(&xc, 0.05).unwrap();
        assert!(hz.p_value < 1e-3, "p={}", hz.p_value);
    }

    #[test]
    fn affine_invariance_of_mardia_and_hz() {
        let x = mvn_matrix(3, 400, 35);
        // Invertible A and shift b.
        let a = [[2.0, 0.4, -0.1], [0.0, 1.5, 0.3], [0.2, -0.2, 0.9]];
        let b = [5.0, -3.0, 0.7];
        let cols: Vec<Vec<f64>> = (0..x.cols())
            .map(|c| {
                (0..3)
                    .map(|r| {
                        (0..3).map(|k| a[r][k] * x.get(k, c)).sum::<f64>() + b[r]
                    })
                    .collect()
            })
            .collect();
        let y = RealMatrix::from_columns(&cols).unwrap();
        let (s1, k1) = mardia(&x, 0.05).unwrap();
        let (s2, k2) = mardia(&y, 0.05).unwrap();
        let rel = |u: f64, v: f64| (u - v).abs() / (1.0 + u.abs());
        assert!(rel(s1.statistic, s2.statistic) < 1e-6);
        assert!(rel(k1.statistic, k2.statistic) < 1e-6);
        let h1 = henze_zirkler(&x, 0.05).unwrap();
        let h2 = henze_zirkler(&y, 0.05).unwrap();
        assert!(rel(h1.statistic, h2.statistic) < 1e-6);
    }

    #[test]
    fn column_permutation_leaves_reports_unchanged() {
        let x = mvn_matrix(3, 301, 36);
        let mut cols: Vec<Vec<f64>> = (0..x.cols()).map(|c| x.column(c)).collect();
        cols.rotate_left(17);
        cols.swap(3, 250);
        let y = RealMatrix::from_columns(&cols).unwrap();
        let (s1, k1) = mardia(&x, 0.05).unwrap();
        let (s2, k2) = mardia(&y, 0.05).unwrap();
        assert!((s1.statistic - s2.statistic).abs() < 1e-9);
        assert!((k1.statistic - k2.statistic).abs() < 1e-9);
        let h1 = henze_zirkler(&x, 0.05).unwrap();
        let h2 = henze_zirkler(&y, 0.05).unwrap();
        assert!((h1.statistic - h2.statistic).abs() < 1e-9);
    }

    #[test]
    fn report_decision_matches_alpha() {
        let r = TestReport::new("t", 1.0, None, 0.02, 0.05);
        assert_eq!(r.decision, Decision::Reject);
        let r = TestReport::new("t", 1.0, None, 0.02, 0.01);
        assert_eq!(r.decision, Decision::Accept);
    }
}
