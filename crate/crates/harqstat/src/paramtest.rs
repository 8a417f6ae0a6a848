//! Tests 2 and 3 (Wilks likelihood-ratio chi-squared tests against the prior
//! law, exact and relaxed) and the closed-form ML estimators of
//! (sigma^2, K, beta, theta), plus the brute-force Gaussian log-likelihood
//! oracle the Wilks statistics are validated against.

use crate::channel::RicianParams;
use crate::error::{Error, Result};
use crate::harqgen::PosteriorDataset;
use crate::mvntest::TestReport;
use crate::numerics::{chi2_sf, log_det_spd, sample_covariance_ml, RealMatrix, SpdFactorization};

/// Wilks p-values are asymptotic; below this many records per degree of
/// freedom the report carries a small-sample warning.
pub const SMALL_SAMPLE_FACTOR: usize = 50;

/// Degrees of freedom of the Wilks tests: the full Gaussian parameter space
/// over d = 4(m+1) dimensions has dimension d + d(d+1)/2 = 2(m+1)(4m+7);
/// the relaxed null keeps 4 free parameters.
pub fn dof(m: usize, relaxed: bool) -> usize {
    let full = 2 * (m + 1) * (4 * m + 7);
    if relaxed {
        full - 4
    } else {
        full
    }
}

/// The prior-law mean and (diagonal) covariance of a record vector:
/// mu0 = [sqrt(K beta/(K+1)) cos(theta) 1; sqrt(K beta/(K+1)) sin(theta) 1;
/// 0; 0] and Sigma0 = diag(beta/(2(K+1)) over the 2(m+1) channel rows,
/// sigma^2/2 over the 2(m+1) noise rows).
#[derive(Debug, Clone)]
pub struct PriorSpec {
    pub mu0: Vec<f64>,
    pub sigma0_diag: Vec<f64>,
    pub source: RicianParams,
    pub m: usize,
}

impl PriorSpec {
    pub fn from_params(params: &RicianParams, m: usize) -> Result<Self> {
        params.validate()?;
        let stride = m + 1;
        let los_amp = (params.k * params.beta / (params.k + 1.0)).sqrt();
        let (mu_re, mu_im) = (los_amp * params.theta.cos(), los_amp * params.theta.sin());
        let mut mu0 = vec![0.0; 4 * stride];
        mu0[..stride].fill(mu_re);
        mu0[stride..2 * stride].fill(mu_im);
        let mut sigma0_diag = vec![params.sigma2 / 2.0; 4 * stride];
        sigma0_diag[..2 * stride].fill(params.beta / (2.0 * (params.k + 1.0)));
        Ok(PriorSpec {
            mu0,
            sigma0_diag,
            source: *params,
            m,
        })
    }

    /// Dense Sigma0 for the log-likelihood oracle.
    pub fn sigma0_matrix(&self) -> RealMatrix {
        let d = self.sigma0_diag.len();
        let mut s = RealMatrix::zeros(d, d);
        for (i, &v) in self.sigma0_diag.iter().enumerate() {
            s.set(i, i, v);
        }
        s
    }
}

/// Closed-form ML estimates of the relaxed null's four parameters, with the
/// sample means and channel variance they derive from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlEstimates {
    pub sigma2_hat: f64,
    pub k_hat: f64,
    pub beta_hat: f64,
    pub theta_hat: f64,
    pub h_bar_re: f64,
    pub h_bar_im: f64,
    pub sigma2_h_bar: f64,
}

fn block_sums(ds: &PosteriorDataset) -> (usize, usize) {
    let stride = ds.m + 1;
    (stride, ds.x.cols())
}

/// ML estimation over a dataset:
/// sigma2_hat = (|X_nR|^2 + |X_nI|^2) / (n(m+1)),
/// h_bar = grand means of the channel blocks,
/// sigma2_h_bar = mean squared deviation of the channel entries,
/// K_hat = |h_bar|^2 / sigma2_h_bar, beta_hat = (K_hat + 1) sigma2_h_bar,
/// theta_hat = atan2(h_bar_im, h_bar_re).
pub fn ml_estimate(ds: &PosteriorDataset) -> Result<MlEstimates> {
    ds.validate()?;
    let (stride, n) = block_sums(ds);
    if n < 2 {
        return Err(Error::InsufficientData(
            "ML estimation needs at least 2 records".into(),
        ));
    }
    let denom = (n * stride) as f64;
    let h_bar_re = ds.x.row_block_sum(0, stride) / denom;
    let h_bar_im = ds.x.row_block_sum(stride, 2 * stride) / denom;
    let sigma2_h_bar = (ds.x.row_block_sum_sq_dev(0, stride, h_bar_re)
        + ds.x.row_block_sum_sq_dev(stride, 2 * stride, h_bar_im))
        / denom;
    let ssq_noise = ds.x.row_block_sum_sq(2 * stride, 4 * stride);
    let mean_sq = h_bar_re * h_bar_re + h_bar_im * h_bar_im;
    if sigma2_h_bar <= 1e-12 * mean_sq || sigma2_h_bar == 0.0 {
        return Err(Error::DegenerateData(format!(
            "channel sample variance {sigma2_h_bar:e} too small relative to mean power {mean_sq:e}"
        )));
    }
    if ssq_noise == 0.0 {
        return Err(Error::DegenerateData("noise block is identically zero".into()));
    }
    let k_hat = mean_sq / sigma2_h_bar;
    Ok(MlEstimates {
        sigma2_hat: ssq_noise / denom,
        k_hat,
        beta_hat: (k_hat + 1.0) * sigma2_h_bar,
        theta_hat: h_bar_im.atan2(h_bar_re),
        h_bar_re,
        h_bar_im,
        sigma2_h_bar,
    })
}

fn finish_wilks(
    name: &str,
    raw_stat: f64,
    m: usize,
    n: usize,
    relaxed: bool,
    alpha: f64,
) -> Result<TestReport> {
    if raw_stat < -1e-6 * n as f64 {
        return Err(Error::InternalConsistency(format!(
            "{name} statistic {raw_stat} is negative beyond tolerance"
        )));
    }
    let stat = raw_stat.max(0.0);
    let k = dof(m, relaxed);
    let p = chi2_sf(stat, k)?;
    let mut report = TestReport::new(name, stat, Some(k as f64), p, alpha);
    if n < SMALL_SAMPLE_FACTOR * k {
        report = report.with_warning(format!(
            "small sample: n={n} < {SMALL_SAMPLE_FACTOR}*dof={}",
            SMALL_SAMPLE_FACTOR * k
        ));
    }
    Ok(report)
}

/// Test 2 (exact parameter matching): -2 ln Lambda_2 against chi-squared with
/// 2(m+1)(4m+7) dof. The statistic is
/// 2n(m+1) ln(beta sigma^2 / (4(K+1)))
/// + 2(K+1)/beta * (|X_hR - muR|^2 + |X_hI - muI|^2)
/// + 2/sigma^2 * (|X_nR|^2 + |X_nI|^2) - n ln|S_hat| - 4n(m+1),
/// with the channel norms centered on the prior LOS mean so the statistic
/// equals exactly twice the log-likelihood gap to the unrestricted supremum.
pub fn wilks_test2(ds: &PosteriorDataset, prior: &PriorSpec, alpha: f64) -> Result<TestReport> {
    ds.validate()?;
    if prior.m != ds.m {
        return Err(Error::Dimension(format!(
            "prior is for m={}, dataset has m={}",
            prior.m, ds.m
        )));
    }
    let (stride, n) = block_sums(ds);
    let d = 4 * stride;
    if n <= d {
        return Err(Error::InsufficientData(format!(
            "test 2 needs n > 4(m+1) = {d}, got {n}"
        )));
    }
    let p = &prior.source;
    let nf = n as f64;
    let mf = stride as f64;
    let cov = sample_covariance_ml(&ds.x)?;
    let log_det = log_det_spd(&cov)?;
    let (mu_re, mu_im) = (prior.mu0[0], prior.mu0[stride]);
    let ssq_h = ds.x.row_block_sum_sq_dev(0, stride, mu_re)
        + ds.x.row_block_sum_sq_dev(stride, 2 * stride, mu_im);
    let ssq_n = ds.x.row_block_sum_sq(2 * stride, 4 * stride);
    let stat = 2.0 * nf * mf * (p.beta * p.sigma2 / (4.0 * (p.k + 1.0))).ln()
        + 2.0 * (p.k + 1.0) * ssq_h / p.beta
        + 2.0 * ssq_n / p.sigma2
        - nf * log_det
        - 4.0 * nf * mf;
    finish_wilks("Test2", stat, ds.m, n, false, alpha)
}

/// Test 3 (relaxed parameter matching): -2 ln Lambda_3 =
/// 2n(m+1) ln(beta_hat sigma2_hat / (4(K_hat+1))) - n ln|S_hat|, against
/// chi-squared with 2(m+1)(4m+7) - 4 dof. Returns the ML estimates alongside.
pub fn wilks_test3(ds: &PosteriorDataset, alpha: f64) -> Result<(TestReport, MlEstimates)> {
    let (stride, n) = block_sums(ds);
    let d = 4 * stride;
    if n <= d {
        return Err(Error::InsufficientData(format!(
            "test 3 needs n > 4(m+1) = {d}, got {n}"
        )));
    }
    let est = ml_estimate(ds)?;
    let nf = n as f64;
    let mf = stride as f64;
    let cov = sample_covariance_ml(&ds.x)?;
    let log_det = log_det_spd(&cov)?;
    let stat = 2.0 * nf * mf
        * (est.beta_hat * est.sigma2_hat / (4.0 * (est.k_hat + 1.0))).ln()
        - nf * log_det;
    let report = finish_wilks("Test3", stat, ds.m, n, true, alpha)?;
    Ok((report, est))
}

/// Exact multivariate Gaussian log-likelihood of the records under
/// N(mu, Sigma), including the -(nd/2) ln(2 pi) constant:
/// ln L = -(n/2) ln|Sigma| - (1/2) sum_i (x_i-mu)^T Sigma^{-1} (x_i-mu)
///        - (nd/2) ln(2 pi).
pub fn loglik_oracle(x: &RealMatrix, mu: &[f64], sigma: &RealMatrix) -> Result<f64> {
    let d = x.rows();
    let n = x.cols();
    if mu.len() != d || sigma.rows() != d || sigma.cols() != d {
        return Err(Error::Dimension(format!(
            "loglik_oracle: x is {d}x{n}, mu has {}, sigma is {}x{}",
            mu.len(),
            sigma.rows(),
            sigma.cols()
        )));
    }
    let chol = SpdFactorization::cholesky(sigma)?;
    let mut quad = 0.0;
    let mut buf = vec![0.0; d];
    for i in 0..n {
        for (a, b) in buf.iter_mut().enumerate() {
            *b = x.get(a, i) - mu[a];
        }
        chol.forward_substitute(&mut buf);
        quad += buf.iter().map(|v| v * v).sum::<f64>();
    }
    let nf = n as f64;
    Ok(-0.5 * nf * chol.log_det()
        - 0.5 * quad
        - 0.5 * nf * d as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// The unrestricted-supremum parameters (mu_hat, Sigma_hat) for oracle
/// comparisons.
pub fn unrestricted_mle(ds: &PosteriorDataset) -> Result<(Vec<f64>, RealMatrix)> {
    let mu = crate::numerics::sample_mean(&ds.x);
    let cov = sample_covariance_ml(&ds.x)?;
    Ok((mu, cov))
}

/// The relaxed null's fitted (mu_hat0, Sigma_hat0) built from the ML
/// estimates, for oracle comparisons.
pub fn relaxed_null_fit(ds: &PosteriorDataset) -> Result<(Vec<f64>, RealMatrix)> {
    let est = ml_estimate(ds)?;
    let stride = ds.m + 1;
    let mut mu = vec![0.0; 4 * stride];
    mu[..stride].fill(est.h_bar_re);
    mu[stride..2 * stride].fill(est.h_bar_im);
    let d = 4 * stride;
    let mut sigma = RealMatrix::zeros(d, d);
    for i in 0..d {
        let v = if i < 2 * stride {
            est.sigma2_h_bar / 2.0
        } else {
            est.sigma2_hat / 2.0
        };
        sigma.set(i, i, v);
    }
    Ok((mu, sigma))
}
