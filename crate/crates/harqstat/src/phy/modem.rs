//! Gray-labeled 64-QAM modulator and the Chase-combining soft demapper.

use crate::error::{Error, Result};
use num_complex::Complex64;

pub const BITS_PER_SYMBOL: usize = 6;
pub const CONSTELLATION_SIZE: usize = 64;

/// 64-QAM constellation with binary-reflected Gray labeling on each axis and
/// unit average symbol energy. The 6-bit label packs the in-phase axis label
/// in the top three bits and the quadrature axis label in the bottom three.
#[derive(Debug, Clone)]
pub struct ModemConfig {
    points: [Complex64; CONSTELLATION_SIZE],
}

fn gray(v: usize) -> usize {
    v ^ (v >> 1)
}

impl ModemConfig {
    pub fn qam64_gray() -> Self {
        // Amplitude levels (2i-7)/sqrt(42), i = 0..8; per-axis mean square 21,
        // so the two axes together normalize to exactly 1.
        let scale = 1.0 / 42.0f64.sqrt();
        let amp = |i: usize| (2.0 * i as f64 - 7.0) * scale;
        let mut gray_inv = [0usize; 8];
        for i in 0..8 {
            gray_inv[gray(i)] = i;
        }
        let mut points = [Complex64::new(0.0, 0.0); CONSTELLATION_SIZE];
        for (label, point) in points.iter_mut().enumerate() {
            let i = gray_inv[label >> 3];
            let q = gray_inv[label & 7];
            *point = Complex64::new(amp(i), amp(q));
        }
        ModemConfig { points }
    }

    #[inline]
    pub fn point(&self, label: u8) -> Complex64 {
        self.points[label as usize]
    }

    pub fn points(&self) -> &[Complex64; CONSTELLATION_SIZE] {
        &self.points
    }

    /// Maps bits (0/1 values, msb first within each 6-bit group) to symbols.
    pub fn modulate(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        if bits.len() % BITS_PER_SYMBOL != 0 {
            return Err(Error::Dimension(format!(
                "bit count {} not divisible by {BITS_PER_SYMBOL}",
                bits.len()
            )));
        }
        Ok(bits
            .chunks_exact(BITS_PER_SYMBOL)
            .map(|chunk| {
                let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
                self.points[label]
            })
            .collect())
    }
}

/// Exact per-bit LLRs for one symbol after Chase-combining any number of
/// (received, channel) observation rounds with common noise power sigma2.
///
/// llr[b] = ln sum_{labels with bit b = 0} exp(-sum_r |y_r - h_r s|^2 / sigma2)
///        - ln sum_{labels with bit b = 1} exp(same),
/// evaluated with full log-sum-exp rather than the max-log approximation.
/// Positive LLR favors bit 0.
pub fn chase_llr(
    modem: &ModemConfig,
    rounds: &[(Complex64, Complex64)],
    sigma2: f64,
) -> Result<[f64; BITS_PER_SYMBOL]> {
    if rounds.is_empty() {
        return Err(Error::InsufficientData(
            "chase_llr needs at least one round".into(),
        ));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma2 must be > 0, got {sigma2}"
        )));
    }
    let mut neg_metric = [0.0f64; CONSTELLATION_SIZE];
    for &(y, h) in rounds {
        for (l, point) in modem.points.iter().enumerate() {
            neg_metric[l] -= (y - h * point).norm_sqr();
        }
    }
    let inv = 1.0 / sigma2;
    for v in neg_metric.iter_mut() {
        *v *= inv;
    }

    let mut llr = [0.0f64; BITS_PER_SYMBOL];
    for (b, out) in llr.iter_mut().enumerate() {
        let shift = BITS_PER_SYMBOL - 1 - b;
        let mut max0 = f64::NEG_INFINITY;
        let mut max1 = f64::NEG_INFINITY;
        for (l, &v) in neg_metric.iter().enumerate() {
            if (l >> shift) & 1 == 0 {
                max0 = max0.max(v);
            } else {
                max1 = max1.max(v);
            }
        }
        let mut sum0 = 0.0;
        let mut sum1 = 0.0;
        for (l, &v) in neg_metric.iter().enumerate() {
            if (l >> shift) & 1 == 0 {
                sum0 += (v - max0).exp();
            } else {
                sum1 += (v - max1).exp();
            }
        }
        *out = (max0 + sum0.ln()) - (max1 + sum1.ln());
    }
    Ok(llr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constellation_is_bijective_with_unit_energy() {
        let modem = ModemConfig::qam64_gray();
        let mut seen = std::collections::HashSet::new();
        let mut energy = 0.0;
        for l in 0..64u8 {
            let p = modem.point(l);
            seen.insert((p.re.to_bits(), p.im.to_bits()));
            energy += p.norm_sqr();
        }
        assert_eq!(seen.len(), 64);
        assert!((energy / 64.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gray_property_along_each_axis() {
        // Adjacent constellation points along either axis differ in exactly
        // one label bit.
        let modem = ModemConfig::qam64_gray();
        let mut by_pos = std::collections::HashMap::new();
        for l in 0..64usize {
            let p = modem.point(l as u8);
            let i = ((p.re * 42.0f64.sqrt() + 7.0) / 2.0).round() as i32;
            let q = ((p.im * 42.0f64.sqrt() + 7.0) / 2.0).round() as i32;
            by_pos.insert((i, q), l);
        }
        for i in 0..8i32 {
            for q in 0..8i32 {
                let l = by_pos[&(i, q)];
                if i + 1 < 8 {
                    let r = by_pos[&(i + 1, q)];
                    assert_eq!((l ^ r).count_ones(), 1, "i-axis at ({i},{q})");
                }
                if q + 1 < 8 {
                    let r = by_pos[&(i, q + 1)];
                    assert_eq!((l ^ r).count_ones(), 1, "q-axis at ({i},{q})");
                }
            }
        }
    }

    #[test]
    fn modulate_length_and_label_zero_round_trip() {
        let modem = ModemConfig::qam64_gray();
        let bits = vec![0u8; 6];
        let sym = modem.modulate(&bits).unwrap();
        assert_eq!(sym.len(), 1);
        assert_eq!(sym[0], modem.point(0));
        // Demapping that point at high SNR returns label 0 on all bits.
        let llr = chase_llr(&modem, &[(sym[0], Complex64::new(1.0, 0.0))], 1e-4).unwrap();
        assert!(llr.iter().all(|&v| v > 0.0), "{llr:?}");
        assert!(modem.modulate(&vec![0u8; 7]).is_err());
    }

    #[test]
    fn twenty_four_hundred_bits_make_four_hundred_symbols() {
        let modem = ModemConfig::qam64_gray();
        let mut rng = crate::channel::SeededRng::new(1, 0);
        let bits: Vec<u8> = (0..2400).map(|_| rng.bit() as u8).collect();
        assert_eq!(modem.modulate(&bits).unwrap().len(), 400);
    }

    #[test]
    fn chase_single_round_matches_direct_computation() {
        // m = 0 reduction: one round, h = 1.
        let modem = ModemConfig::qam64_gray();
        let y = Complex64::new(0.31, -0.77);
        let h = Complex64::new(1.0, 0.0);
        let sigma2 = 0.5;
        let llr = chase_llr(&modem, &[(y, h)], sigma2).unwrap();
        for b in 0..6 {
            let mut p0 = 0.0;
            let mut p1 = 0.0;
            for l in 0..64usize {
                let w = (-(y - modem.point(l as u8)).norm_sqr() / sigma2).exp();
                if (l >> (5 - b)) & 1 == 0 {
                    p0 += w;
                } else {
                    p1 += w;
                }
            }
            let direct = p0.ln() - p1.ln();
            assert!((llr[b] - direct).abs() < 1e-10, "bit {b}");
        }
    }

    #[test]
    fn two_identical_rounds_equal_half_noise_power() {
        let modem = ModemConfig::qam64_gray();
        let y = Complex64::new(-0.4, 0.9);
        let h = Complex64::new(0.8, -0.3);
        let sigma2 = 0.7;
        let twice = chase_llr(&modem, &[(y, h), (y, h)], sigma2).unwrap();
        let once = chase_llr(&modem, &[(y, h)], sigma2 / 2.0).unwrap();
        for b in 0..6 {
            assert!((twice[b] - once[b]).abs() < 1e-9, "bit {b}");
        }
    }

    #[test]
    fn noiseless_limit_signs_match_label() {
        let modem = ModemConfig::qam64_gray();
        for label in [0u8, 1, 17, 42, 63] {
            let y = modem.point(label);
            let llr = chase_llr(&modem, &[(y, Complex64::new(1.0, 0.0))], 1e-5).unwrap();
            for b in 0..6 {
                let bit = (label >> (5 - b)) & 1;
                if bit == 0 {
                    assert!(llr[b] > 0.0, "label {label} bit {b}: {}", llr[b]);
                } else {
                    assert!(llr[b] < 0.0, "label {label} bit {b}: {}", llr[b]);
                }
            }
        }
    }

    #[test]
    fn rounds_permutation_invariance() {
        let modem = ModemConfig::qam64_gray();
        let rounds = [
            (Complex64::new(0.2, 0.4), Complex64::new(1.0, -0.2)),
            (Complex64::new(-0.9, 0.1), Complex64::new(0.5, 0.6)),
            (Complex64::new(0.05, -0.3), Complex64::new(-0.7, 0.9)),
        ];
        let mut permuted = rounds;
        permuted.swap(0, 2);
        let a = chase_llr(&modem, &rounds, 0.4).unwrap();
        let b = chase_llr(&modem, &permuted, 0.4).unwrap();
        for t in 0..6 {
            assert!((a[t] - b[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn common_phase_rotation_leaves_llrs_unchanged() {
        let modem = ModemConfig::qam64_gray();
        let rounds = [
            (Complex64::new(0.2, 0.4), Complex64::new(1.0, -0.2)),
            (Complex64::new(-0.9, 0.1), Complex64::new(0.5, 0.6)),
        ];
        let rot = Complex64::from_polar(1.0, 1.234);
        let rotated: Vec<_> = rounds.iter().map(|&(y, h)| (y * rot, h * rot)).collect();
        let a = chase_llr(&modem, &rounds, 0.4).unwrap();
        let b = chase_llr(&modem, &rotated, 0.4).unwrap();
        for t in 0..6 {
            assert!((a[t] - b[t]).abs() < 1e-9);
        }
    }
}
