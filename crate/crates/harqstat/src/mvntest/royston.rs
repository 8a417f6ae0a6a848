//! Royston's multivariate extension of the Shapiro-Wilk test.
//!
//! Per-coordinate W statistics (AS R94 weight and normalization polynomials,
//! valid for 3 <= n <= 5000) are transformed to standard-normal equivalents
//! z_j, converted to chi-squared-1 equivalents psi_j = Phi^{-1}(Phi(-z_j)/2)^2,
//! and combined as H = e * sum psi_j / d against a chi-squared law with
//! Royston's equivalent degrees of freedom e, computed from the average
//! transformed inter-coordinate correlation. Datasets with more than 5000
//! records are subsampled to 5000 with a seeded draw, noted in the report.

use super::TestReport;
use crate::channel::SeededRng;
use crate::error::{Error, Result};
use crate::numerics::{chi2_sf_real, normal_quantile, normal_sf, RealMatrix};

pub const ROYSTON_MAX_N: usize = 5000;
const SUBSAMPLE_SEED: u64 = 0x526f_7973_746f_6e21;

/// Shapiro-Wilk W for an ascending-sorted sample, 3 <= n <= 5000.
fn shapiro_wilk_w(sorted: &[f64]) -> Result<f64> {
    let n = sorted.len();
    if !(3..=ROYSTON_MAX_N).contains(&n) {
        return Err(Error::InsufficientData(format!(
            "Shapiro-Wilk approximation supports 3 <= n <= {ROYSTON_MAX_N}, got {n}"
        )));
    }
    let nf = n as f64;
    let m: Vec<f64> = (1..=n)
        .map(|i| normal_quantile((i as f64 - 0.375) / (nf + 0.25)))
        .collect::<Result<_>>()?;
    let ssq: f64 = m.iter().map(|v| v * v).sum();

    let mut a = vec![0.0f64; n];
    if n == 3 {
        a[0] = -std::f64::consts::FRAC_1_SQRT_2;
        a[2] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        let u = 1.0 / nf.sqrt();
        let rsn = 1.0 / ssq.sqrt();
        let poly = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, &v| acc * x + v);
        // AS R94 tail-weight corrections.
        let an = poly(
            &[m[n - 1] * rsn, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056],
            u,
        );
        let (phi, start) = if n > 5 {
            let an1 = poly(
                &[m[n - 2] * rsn, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633],
                u,
            );
            a[n - 1] = an;
            a[n - 2] = an1;
            a[0] = -an;
            a[1] = -an1;
            (
                (ssq - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2])
                    / (1.0 - 2.0 * an * an - 2.0 * an1 * an1),
                2,
            )
        } else {
            a[n - 1] = an;
            a[0] = -an;
            ((ssq - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * an * an), 1)
        };
        let scale = 1.0 / phi.sqrt();
        for i in start..(n - start) {
            a[i] = m[i] * scale;
        }
    }

    let mean = sorted.iter().sum::<f64>() / nf;
    let ss_dev: f64 = sorted.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_dev <= 0.0 {
        return Err(Error::DegenerateData(
            "coordinate has zero variance; W undefined".into(),
        ));
    }
    let num: f64 = a.iter().zip(sorted).map(|(ai, xi)| ai * xi).sum();
    Ok((num * num / ss_dev).min(1.0))
}

/// Standard-normal equivalent of W (large z = non-normal), AS R94
/// normalizations per sample-size branch.
fn w_to_z(w: f64, n: usize) -> Result<f64> {
    let log1mw = (1.0 - w).max(1e-15).ln();
    if n == 3 {
        // Exact small-sample law: p = (6/pi)(asin(sqrt W) - asin(sqrt 0.75)).
        let p = (6.0 / std::f64::consts::PI)
            * (w.sqrt().asin() - 0.75f64.sqrt().asin());
        let p = p.clamp(1e-15, 1.0 - 1e-15);
        return Ok(-normal_quantile(p)?);
    }
    if n <= 11 {
        let nf = n as f64;
        let gamma = -2.273 + 0.459 * nf;
        let mu = 0.5440 - 0.39978 * nf + 0.025054 * nf * nf - 0.0006714 * nf * nf * nf;
        let sigma = (1.3822 - 0.77857 * nf + 0.062767 * nf * nf - 0.0020322 * nf * nf * nf).exp();
        let transformed = -(gamma - log1mw).max(1e-15).ln();
        Ok((transformed - mu) / sigma)
    } else {
        let x = (n as f64).ln();
        let mu = -1.5861 - 0.31082 * x - 0.083751 * x * x + 0.0038915 * x * x * x;
        let sigma = (-0.4803 - 0.082676 * x + 0.0030302 * x * x).exp();
        Ok((log1mw - mu) / sigma)
    }
}

/// chi-squared-1 equivalent of z: psi = Phi^{-1}(Phi(-z)/2)^2, which is
/// exactly chi-squared with 1 dof under H0 and grows like z^2 in the
/// rejection tail.
fn z_to_psi(z: f64) -> Result<f64> {
    let u = normal_sf(z);
    if u < 1e-300 {
        // Quantile underflows; the equivalent is z^2 to within o(1).
        return Ok(z * z);
    }
    let q = normal_quantile((u / 2.0).min(0.5 - 1e-16))?;
    Ok(q * q)
}

/// Royston's H test over the coordinates (rows) of `x`.
pub fn royston(x: &RealMatrix, alpha: f64) -> Result<TestReport> {
    let d = x.rows();
    if d < 2 {
        return Err(Error::Dimension("royston needs d >= 2 coordinates".into()));
    }
    if x.cols() < 3 {
        return Err(Error::InsufficientData(format!(
            "royston needs n >= 3, got {}",
            x.cols()
        )));
    }
    let mut warnings = Vec::new();
    let working: RealMatrix = if x.cols() > ROYSTON_MAX_N {
        let mut rng = SeededRng::new(SUBSAMPLE_SEED, x.cols() as u64);
        let mut idx: Vec<usize> = (0..x.cols()).collect();
        for i in 0..ROYSTON_MAX_N {
            let j = i + rng.uniform_index(idx.len() - i);
            idx.swap(i, j);
        }
        idx.truncate(ROYSTON_MAX_N);
        let cols: Vec<Vec<f64>> = idx.iter().map(|&c| x.column(c)).collect();
        warnings.push(format!(
            "subsampled {ROYSTON_MAX_N} of {} records (seeded draw) for the Shapiro-Wilk range",
            x.cols()
        ));
        RealMatrix::from_columns(&cols)?
    } else {
        x.clone()
    };
    let n = working.cols();
    let nf = n as f64;
    let df = d as f64;

    let mut psi_sum = 0.0;
    for j in 0..d {
        let mut col = working.row(j).to_vec();
        col.sort_by(|a, b| a.partial_cmp(b).expect("finite entries"));
        let w = shapiro_wilk_w(&col)?;
        let z = w_to_z(w, n)?;
        psi_sum += z_to_psi(z)?;
    }

    // Equivalent degrees of freedom from the average transformed correlation,
    // with u = 0.715, lambda = 5, v = 0.21364 + 0.015124 ln(n)^2
    // - 0.0018034 ln(n)^3.
    let cov = crate::numerics::sample_covariance_ml(&working)?;
    let ln_n = nf.ln();
    let u = 0.715;
    let v = 0.21364 + 0.015124 * ln_n * ln_n - 0.0018034 * ln_n * ln_n * ln_n;
    let mut transformed_sum = 0.0;
    for a in 0..d {
        for b in 0..d {
            if a == b {
                continue;
            }
            let denom = (cov.get(a, a) * cov.get(b, b)).sqrt();
            if denom <= 0.0 {
                return Err(Error::DegenerateData(
                    "zero-variance coordinate in correlation step".into(),
                ));
            }
            let c = (cov.get(a, b) / denom).clamp(-1.0, 1.0);
            transformed_sum += c.powi(5) * (1.0 - u * (1.0 - c).powf(u) / v);
        }
    }
    let mean_c = transformed_sum / (df * df - df);
    let e = (df / (1.0 + (df - 1.0) * mean_c)).clamp(1.0, df);

    let statistic = e * psi_sum / df;
    let p = chi2_sf_real(statistic, e)?;
    let mut report = TestReport::new("Royston", statistic, Some(e), p, alpha);
    report.warnings = warnings;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mvntest::Decision;

    fn columns(d: usize, n: usize, mut f: impl FnMut(usize, usize) -> f64) -> RealMatrix {
        let cols: Vec<Vec<f64>> = (0..n).map(|c| (0..d).map(|r| f(r, c)).collect()).collect();
        RealMatrix::from_columns(&cols).unwrap()
    }

    #[test]
    fn shapiro_wilk_near_one_for_perfect_normal_scores() {
        let n = 500;
        let sorted: Vec<f64> = (0..n)
            .map(|i| normal_quantile((i as f64 + 0.5) / n as f64).unwrap())
            .collect();
        let w = shapiro_wilk_w(&sorted).unwrap();
        assert!(w > 0.999, "W = {w}");
    }

    #[test]
    fn shapiro_wilk_low_for_exponential_sample() {
        let mut rng = SeededRng::new(40, 0);
        let mut xs: Vec<f64> = (0..500).map(|_| -rng.uniform_open_zero().ln()).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let w = shapiro_wilk_w(&xs).unwrap();
        assert!(w < 0.9, "W = {w}");
    }

    #[test]
    fn royston_null_accepts() {
        let mut rng = SeededRng::new(41, 0);
        let x = columns(4, 2000, |_, _| rng_normal(&mut rng));
        let r = royston(&x, 0.05).unwrap();
        assert_eq!(r.decision, Decision::Accept, "p = {}", r.p_value);
        assert!(r.dof.unwrap() > 1.0 && r.dof.unwrap() <= 4.0);
    }

    fn rng_normal(rng: &mut SeededRng) -> f64 {
        rng.standard_normal()
    }

    #[test]
    fn royston_rejects_exponential_marginals() {
        let mut rng = SeededRng::new(42, 0);
        let x = columns(4, 2000, |_, _| -rng.uniform_open_zero().ln());
        let r = royston(&x, 0.05).unwrap();
        assert!(r.p_value < 1e-6, "p = {}", r.p_value);
    }

    #[test]
    fn royston_near_perfect_scores_has_high_p() {
        // Two independent coordinates of exactly-normal scores (inverse CDF
        // of a uniform grid), one shuffled to break correlation.
        let n = 1000usize;
        let scores: Vec<f64> = (0..n)
            .map(|i| normal_quantile((i as f64 + 0.5) / n as f64).unwrap())
            .collect();
        let mut shuffled = scores.clone();
        let mut rng = SeededRng::new(43, 0);
        for i in (1..n).rev() {
            let j = rng.uniform_index(i + 1);
            shuffled.swap(i, j);
        }
        let cols: Vec<Vec<f64>> = (0..n).map(|i| vec![scores[i], shuffled[i]]).collect();
        let x = RealMatrix::from_columns(&cols).unwrap();
        let r = royston(&x, 0.05).unwrap();
        assert!(r.p_value > 0.5, "p = {}", r.p_value);
    }

    #[test]
    fn royston_subsamples_large_n_with_warning() {
        let mut rng = SeededRng::new(44, 0);
        let x = columns(2, 6000, |_, _| rng_normal(&mut rng));
        let r = royston(&x, 0.05).unwrap();
        assert_eq!(r.warnings.len(), 1);
        assert!(r.warnings[0].contains("subsampled"));
        assert_eq!(r.decision, Decision::Accept);
    }

    #[test]
    fn royston_invariant_under_positive_scaling_and_permutation() {
        let mut rng = SeededRng::new(45, 0);
        let x = columns(3, 400, |_, _| rng_normal(&mut rng));
        let scaled_cols: Vec<Vec<f64>> = (0..x.cols())
            .map(|c| {
                let col = x.column(c);
                vec![3.0 * col[2], 0.5 * col[0], 7.5 * col[1]]
            })
            .collect();
        let y = RealMatrix::from_columns(&scaled_cols).unwrap();
        let rx = royston(&x, 0.05).unwrap();
        let ry = royston(&y, 0.05).unwrap();
        assert!((rx.statistic - ry.statistic).abs() < 1e-6 * (1.0 + rx.statistic));
        assert!((rx.p_value - ry.p_value).abs() < 1e-9);
    }

    #[test]
    fn royston_range_checks() {
        let x = columns(2, 2, |r, c| (r + c) as f64);
        assert!(royston(&x, 0.05).is_err());
        let y = columns(1, 10, |_, c| c as f64);
        assert!(royston(&y, 0.05).is_err());
    }
}
