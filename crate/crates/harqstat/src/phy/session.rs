//! One HARQ Chase-Combining session: encode once, transmit over fresh
//! channel/noise draws each round, combine all rounds, decode, ACK/NACK.

use super::code::LdpcCode;
use super::decoder::{DecodeOutput, SumProductDecoder};
use super::modem::{chase_llr, ModemConfig, BITS_PER_SYMBOL};
use crate::channel::{sample_cscg, sample_rician, RicianParams, SeededRng};
use crate::error::{Error, Result};
use num_complex::Complex64;

pub const MAX_BP_ITERATIONS: usize = 50;

/// Channel/noise realizations and outcome of one (re)transmission round.
#[derive(Debug, Clone)]
pub struct RoundTrace {
    /// The N_IF independent fading instances of this round.
    pub channel: Vec<Complex64>,
    /// One recorded noise sample per fading-instance group.
    pub noise: Vec<Complex64>,
    /// Symbol index each recorded noise sample was taken from.
    pub noise_symbol_indices: Vec<usize>,
    /// Decode outcome after combining all rounds up to this one.
    pub ack: bool,
    /// Whether belief propagation converged (ACK additionally requires the
    /// decoded info bits to match the transmitted ones).
    pub converged: bool,
}

/// Full trace of one session: a prefix of NACK rounds optionally terminated
/// by a single ACK round, never more than M+1 rounds.
#[derive(Debug, Clone)]
pub struct SessionTrace {
    pub rounds: Vec<RoundTrace>,
    pub max_retransmissions: usize,
}

impl SessionTrace {
    /// ACK of the last round run.
    pub fn final_ack(&self) -> bool {
        self.rounds.last().map(|r| r.ack).unwrap_or(false)
    }

    /// Number of rounds actually run (m index of the last round is this - 1).
    pub fn rounds_used(&self) -> usize {
        self.rounds.len()
    }

    /// True when the session reached round `m` (all earlier rounds NACKed)
    /// and round `m` was run.
    pub fn reached_round(&self, m: usize) -> bool {
        self.rounds.len() > m
    }
}

/// Runs one HARQ session with at most `max_m + 1` rounds. Per round: draw
/// N_IF fading instances (mapped periodically onto the L_s symbols), add
/// per-symbol CSCG noise, Chase-combine every round so far with exact
/// per-symbol LLRs, decode, and ACK iff the decoded info bits equal the
/// transmitted info bits.
pub fn run_session(
    code: &LdpcCode,
    decoder: &SumProductDecoder,
    modem: &ModemConfig,
    params: &RicianParams,
    n_if: usize,
    max_m: usize,
    rng: &mut SeededRng,
) -> Result<SessionTrace> {
    params.validate()?;
    if code.block_len() % BITS_PER_SYMBOL != 0 {
        return Err(Error::Config(format!(
            "block length {} not divisible by {BITS_PER_SYMBOL}",
            code.block_len()
        )));
    }
    let n_symbols = code.block_len() / BITS_PER_SYMBOL;
    if n_if == 0 || n_if > n_symbols {
        return Err(Error::Config(format!(
            "N_IF must lie in 1..={n_symbols}, got {n_if}"
        )));
    }

    let info: Vec<u8> = (0..code.info_len()).map(|_| rng.bit() as u8).collect();
    let codeword = code.encode(&info)?;
    let symbols = modem.modulate(&codeword)?;

    // Per symbol, the (y, h) observation of every round so far.
    let mut observations: Vec<Vec<(Complex64, Complex64)>> =
        vec![Vec::with_capacity(max_m + 1); n_symbols];
    let mut rounds = Vec::new();

    for _round in 0..=max_m {
        let channel = sample_rician(params, n_if, rng)?;
        let noise_all = sample_cscg(params.sigma2, n_symbols, rng)?;
        for (j, obs) in observations.iter_mut().enumerate() {
            let h = channel[j % n_if];
            obs.push((h * symbols[j] + noise_all[j], h));
        }
        // Record one noise sample per fading-instance group, picked uniformly
        // among the symbols that used this instance.
        let mut noise = Vec::with_capacity(n_if);
        let mut noise_symbol_indices = Vec::with_capacity(n_if);
        for k in 0..n_if {
            let group_size = (n_symbols - k).div_ceil(n_if);
            let j = k + n_if * rng.uniform_index(group_size);
            noise.push(noise_all[j]);
            noise_symbol_indices.push(j);
        }

        let mut llrs = vec![0.0f64; code.block_len()];
        for (j, obs) in observations.iter().enumerate() {
            let bit_llrs = chase_llr(modem, obs, params.sigma2)?;
            llrs[j * BITS_PER_SYMBOL..(j + 1) * BITS_PER_SYMBOL].copy_from_slice(&bit_llrs);
        }
        let DecodeOutput {
            bits, converged, ..
        } = decoder.decode(&llrs, MAX_BP_ITERATIONS);
        let ack = code.extract_info(&bits) == info;

        rounds.push(RoundTrace {
            channel,
            noise,
            noise_symbol_indices,
            ack,
            converged,
        });
        if ack {
            break;
        }
    }
    Ok(SessionTrace {
        rounds,
        max_retransmissions: max_m,
    })
}
