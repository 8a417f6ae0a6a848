//! Prior Rician fading and CSCG noise laws, plus the seeded RNG streams used
//! everywhere.
//!
//! Normal variates come from Box-Muller over uniforms built directly from
//! the raw 64-bit output of a ChaCha8 counter-based generator, so a given
//! (seed, stream) pair reproduces an identical sample sequence run after run
//! and session generation can be parallelized over streams.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Prior channel law (beta, K, theta) plus noise power sigma^2, all linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianParams {
    /// Mean channel power E|h|^2.
    pub beta: f64,
    /// Rician factor (LOS power / scattered power), >= 0.
    pub k: f64,
    /// LOS phase in radians, in (-pi, pi].
    pub theta: f64,
    /// Noise power E|n|^2.
    pub sigma2: f64,
}

impl RicianParams {
    pub fn new(beta: f64, k: f64, theta: f64, sigma2: f64) -> Result<Self> {
        let p = RicianParams {
            beta,
            k,
            theta,
            sigma2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta must be > 0, got {}",
                self.beta
            )));
        }
        if !(self.k >= 0.0) || !self.k.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "K must be >= 0, got {}",
                self.k
            )));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma2 must be > 0, got {}",
                self.sigma2
            )));
        }
        if !(self.theta > -std::f64::consts::PI && self.theta <= std::f64::consts::PI) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in (-pi, pi], got {}",
                self.theta
            )));
        }
        Ok(())
    }

    /// Same parameters with a different noise power.
    pub fn with_sigma2(&self, sigma2: f64) -> Self {
        RicianParams { sigma2, ..*self }
    }

    /// Deterministic LOS component sqrt(K beta / (K+1)) e^{j theta}.
    pub fn los_component(&self) -> Complex64 {
        let amp = (self.k * self.beta / (self.k + 1.0)).sqrt();
        Complex64::from_polar(amp, self.theta)
    }

    /// Per-component standard deviation of the scattered term,
    /// sqrt(beta / (2(K+1))).
    pub fn scatter_sigma(&self) -> f64 {
        (self.beta / (2.0 * (self.k + 1.0))).sqrt()
    }
}

/// Reproducible random stream: identical (seed, stream) pairs produce
/// bitwise-identical sample sequences.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SeededRng {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in [0, 1), 53-bit resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in (0, 1], 53-bit resolution; never zero, safe under ln().
    #[inline]
    pub fn uniform_open_zero(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// One pair of independent standard normals via Box-Muller.
    #[inline]
    pub fn standard_normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform_open_zero();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let phi = 2.0 * std::f64::consts::PI * u2;
        (r * phi.cos(), r * phi.sin())
    }

    /// Single standard normal; draws a full Box-Muller pair and discards the
    /// second half so the stream position stays a simple function of the
    /// number of calls.
    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.standard_normal_pair().0
    }

    /// Uniform index in 0..n via rejection (no modulo bias).
    pub fn uniform_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let n = n as u64;
        let bound = u64::MAX - u64::MAX % n;
        loop {
            let x = self.next_u64();
            if x < bound {
                return (x % n) as usize;
            }
        }
    }

    /// Random bit.
    #[inline]
    pub fn bit(&mut self) -> bool {
        self.next_u64() & 1 == 1
    }

    /// Derives an unrelated child seed for auxiliary draws (calibration
    /// probes, replications). SplitMix64 finalizer over (seed, tag).
    pub fn derive_seed(seed: u64, tag: u64) -> u64 {
        let mut z = seed ^ tag.wrapping_mul(0x9e3779b97f4a7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }
}

/// Draws `count` independent Rician channel gains.
///
/// The complex gain is generated as e^{j theta} (sqrt(K beta/(K+1)) + c)
/// with c a zero-mean CSCG of power beta/(K+1); since the CSCG law is
/// circularly symmetric this matches the usual LOS-plus-scatter form, and the
/// LOS phase rotates the whole sample so |h| does not depend on theta.
pub fn sample_rician(p: &RicianParams, count: usize, rng: &mut SeededRng) -> Result<Vec<Complex64>> {
    p.validate()?;
    let los_amp = (p.k * p.beta / (p.k + 1.0)).sqrt();
    let sc = p.scatter_sigma();
    let rot = Complex64::from_polar(1.0, p.theta);
    Ok((0..count)
        .map(|_| {
            let (g1, g2) = rng.standard_normal_pair();
            rot * Complex64::new(los_amp + sc * g1, sc * g2)
        })
        .collect())
}

/// Draws `count` CSCG noise samples with E|n|^2 = sigma2: real and imaginary
/// parts are independent N(0, sigma2/2).
pub fn sample_cscg(sigma2: f64, count: usize, rng: &mut SeededRng) -> Result<Vec<Complex64>> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sigma2 must be > 0, got {sigma2}"
        )));
    }
    let s = (sigma2 / 2.0).sqrt();
    Ok((0..count)
        .map(|_| {
            let (g1, g2) = rng.standard_normal_pair();
            Complex64::new(s * g1, s * g2)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(samples: &[Complex64]) -> Complex64 {
        samples.iter().sum::<Complex64>() / samples.len() as f64
    }

    fn mean_power(samples: &[Complex64]) -> f64 {
        samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64
    }

    #[test]
    fn params_validation() {
        assert!(RicianParams::new(8.0, 1.0, 0.0, 0.1).is_ok());
        assert!(RicianParams::new(0.0, 1.0, 0.0, 0.1).is_err());
        assert!(RicianParams::new(8.0, -0.1, 0.0, 0.1).is_err());
        assert!(RicianParams::new(8.0, 1.0, 0.0, 0.0).is_err());
        assert!(RicianParams::new(8.0, 1.0, 4.0, 0.1).is_err());
    }

    #[test]
    fn rayleigh_when_k_zero_has_zero_mean() {
        let p = RicianParams::new(2.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(p.los_component(), Complex64::new(0.0, 0.0));
        let mut rng = SeededRng::new(1, 0);
        let xs = sample_rician(&p, 100_000, &mut rng).unwrap();
        let m = mean(&xs);
        // 4-sigma band on each component: sd = sqrt(beta/2/n).
        let band = 4.0 * (2.0f64 / 2.0 / 100_000.0).sqrt();
        assert!(m.re.abs() < band && m.im.abs() < band, "{m}");
    }

    #[test]
    fn paper_prior_los_is_two() {
        // beta = 8, K = 1, theta = 0: LOS amplitude sqrt(8/2) = 2 exactly.
        let p = RicianParams::new(8.0, 1.0, 0.0, 0.1).unwrap();
        assert_eq!(p.los_component(), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn paper_prior_moments() {
        let p = RicianParams::new(8.0, 1.0, 0.0, 0.1).unwrap();
        let mut rng = SeededRng::new(2024, 7);
        let xs = sample_rician(&p, 100_000, &mut rng).unwrap();
        let pow = mean_power(&xs);
        assert!((pow - 8.0).abs() < 0.15, "E|h|^2 = {pow}");
        let m2 = mean(&xs).norm_sqr();
        assert!((m2 - 4.0).abs() < 0.1, "|mean|^2 = {m2}");
    }

    #[test]
    fn cscg_moments() {
        let mut rng = SeededRng::new(3, 0);
        let n = 100_000usize;
        // Per-component variance sigma2/2 within 3%.
        let xs = sample_cscg(0.13183, n, &mut rng).unwrap();
        let var_re = xs.iter().map(|s| s.re * s.re).sum::<f64>() / n as f64;
        assert!((var_re / 0.065915 - 1.0).abs() < 0.03, "{var_re}");
        // Mean near zero.
        let m = mean(&xs);
        let band = 4.0 * (0.13183f64 / n as f64).sqrt();
        assert!(m.re.abs() < band && m.im.abs() < band);
        // Total power within 2%.
        let xs2 = sample_cscg(2.0, n, &mut rng).unwrap();
        let pow = mean_power(&xs2);
        assert!((pow / 2.0 - 1.0).abs() < 0.02, "{pow}");
    }

    #[test]
    fn theta_rotation_rotates_mean_exactly() {
        let n = 5000;
        let p0 = RicianParams::new(8.0, 1.0, 0.0, 0.1).unwrap();
        let phi = 0.8;
        let p1 = RicianParams::new(8.0, 1.0, phi, 0.1).unwrap();
        let a = sample_rician(&p0, n, &mut SeededRng::new(5, 5)).unwrap();
        let b = sample_rician(&p1, n, &mut SeededRng::new(5, 5)).unwrap();
        let rot = Complex64::from_polar(1.0, phi);
        let (ma, mb) = (mean(&a), mean(&b));
        assert!((ma * rot - mb).norm() < 1e-12);
        // |h| per sample unchanged under the rotation.
        for (x, y) in a.iter().zip(&b) {
            assert!((x.norm() - y.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn large_k_collapses_to_los() {
        let p = RicianParams::new(4.0, 1e6, 0.3, 0.1).unwrap();
        let los = p.los_component();
        let xs = sample_rician(&p, 1000, &mut SeededRng::new(6, 0)).unwrap();
        for x in xs {
            assert!((x - los).norm() < 0.01);
        }
    }

    #[test]
    fn identical_seed_and_stream_reproduce_bitwise() {
        let p = RicianParams::new(8.0, 1.0, 0.0, 0.36).unwrap();
        let a = sample_rician(&p, 64, &mut SeededRng::new(42, 9)).unwrap();
        let b = sample_rician(&p, 64, &mut SeededRng::new(42, 9)).unwrap();
        assert_eq!(a, b);
        let c = sample_rician(&p, 64, &mut SeededRng::new(42, 10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_index_in_range() {
        let mut rng = SeededRng::new(8, 0);
        for n in [1usize, 2, 7, 400] {
            for _ in 0..200 {
                assert!(rng.uniform_index(n) < n);
            }
        }
    }
}
