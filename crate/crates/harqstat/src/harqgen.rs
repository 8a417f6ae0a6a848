//! Dataset generation: runs HARQ sessions in seeded parallel batches,
//! classifies them by the round-m ACK/NACK, assembles the 4(m+1)-by-n record
//! matrices, calibrates sigma^2 to a target failure rate, and hosts the
//! parameter-mismatch uncoded-BER harness.

use crate::channel::{sample_cscg, sample_rician, RicianParams, SeededRng};
use crate::error::{Error, Result};
use crate::numerics::RealMatrix;
use crate::phy::{run_session, LdpcCode, ModemConfig, SessionTrace, SumProductDecoder};
use rayon::prelude::*;
use std::path::Path;

/// Which conditioning event produced a dataset. `Prior` marks synthetic
/// datasets drawn straight from the prior law (null-calibration inputs), with
/// no ACK/NACK conditioning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetClass {
    Failed,
    Successful,
    Prior,
}

impl DatasetClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            DatasetClass::Failed => "failed",
            DatasetClass::Successful => "successful",
            DatasetClass::Prior => "prior",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "failed" => Ok(DatasetClass::Failed),
            "successful" => Ok(DatasetClass::Successful),
            "prior" => Ok(DatasetClass::Prior),
            other => Err(Error::Config(format!("unknown dataset class {other:?}"))),
        }
    }
}

/// Generation recipe for one (N_IF, m) dataset pair.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    /// Independent fading instances per transport block.
    pub n_if: usize,
    /// Retransmission index under study (m = 0 is the first transmission).
    pub m: usize,
    /// Target record count per class; generation stops once both classes
    /// have at least this many records.
    pub n_target: usize,
    /// Prior channel/noise law; `sigma2` must already be calibrated or given.
    pub prior: RicianParams,
    pub seed: u64,
}

/// How record generation is budgeted.
#[derive(Debug, Clone)]
pub struct GenOptions {
    /// Hard cap on sessions per dataset spec; exceeding it is a calibration
    /// error (starved class), never a silent truncation.
    pub max_sessions: usize,
    /// Sessions per parallel batch are adapted to the remaining need but
    /// never exceed this.
    pub batch_cap: usize,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            max_sessions: 400_000,
            batch_cap: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub seed: u64,
    pub prior: RicianParams,
}

/// A posterior (or prior-synthetic) record matrix. Row blocks are ordered
/// [Re h; Im h; Re n; Im n], each block spanning rounds 0..=m.
#[derive(Debug, Clone)]
pub struct PosteriorDataset {
    pub class: DatasetClass,
    pub m: usize,
    pub n_if: usize,
    pub x: RealMatrix,
    pub provenance: Provenance,
}

impl PosteriorDataset {
    pub fn dim(&self) -> usize {
        4 * (self.m + 1)
    }

    pub fn n_records(&self) -> usize {
        self.x.cols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.rows() != self.dim() {
            return Err(Error::Dimension(format!(
                "dataset for m={} must have {} rows, has {}",
                self.m,
                self.dim(),
                self.x.rows()
            )));
        }
        self.provenance.prior.validate()
    }
}

/// Extracts the N_IF zipped records of one session that reached round m:
/// record k takes the k-th fading instance and its recorded noise sample from
/// every round.
fn session_records(trace: &SessionTrace, m: usize, n_if: usize) -> Vec<Vec<f64>> {
    let stride = m + 1;
    (0..n_if)
        .map(|k| {
            let mut rec = vec![0.0; 4 * stride];
            for (r, round) in trace.rounds.iter().take(stride).enumerate() {
                let h = round.channel[k];
                let nz = round.noise[k];
                rec[r] = h.re;
                rec[stride + r] = h.im;
                rec[2 * stride + r] = nz.re;
                rec[3 * stride + r] = nz.im;
            }
            rec
        })
        .collect()
}

fn run_batch(
    code: &LdpcCode,
    decoder: &SumProductDecoder,
    modem: &ModemConfig,
    params: &RicianParams,
    n_if: usize,
    m: usize,
    seed: u64,
    first_stream: u64,
    count: usize,
) -> Result<Vec<SessionTrace>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = SeededRng::new(seed, first_stream + i as u64);
            run_session(code, decoder, modem, params, n_if, m, &mut rng)
        })
        .collect()
}

/// Per-batch generation progress, for logging.
#[derive(Debug, Clone, Copy)]
pub struct GenProgress {
    pub sessions: u64,
    pub failed_records: usize,
    pub successful_records: usize,
}

/// Runs sessions and classifies them into failed/successful record sets per
/// the round-m outcome. A session contributes its N_IF records to the failed
/// set when rounds 0..=m all NACKed, to the successful set when rounds 0..m
/// NACKed and round m ACKed, and is discarded when it ACKed early.
pub fn classify_and_collect(
    spec: &DatasetSpec,
    code: &LdpcCode,
    modem: &ModemConfig,
    opts: &GenOptions,
) -> Result<(PosteriorDataset, PosteriorDataset)> {
    classify_and_collect_with(spec, code, modem, opts, |_| {})
}

/// `classify_and_collect` with a per-batch progress callback.
pub fn classify_and_collect_with<F: FnMut(GenProgress)>(
    spec: &DatasetSpec,
    code: &LdpcCode,
    modem: &ModemConfig,
    opts: &GenOptions,
    mut progress: F,
) -> Result<(PosteriorDataset, PosteriorDataset)> {
    spec.prior.validate()?;
    if spec.n_target == 0 {
        return Err(Error::InvalidParameter("n_target must be >= 1".into()));
    }
    let decoder = SumProductDecoder::new(code);
    let mut failed_cols: Vec<Vec<f64>> = Vec::new();
    let mut success_cols: Vec<Vec<f64>> = Vec::new();
    let mut sessions_run = 0u64;

    while failed_cols.len() < spec.n_target || success_cols.len() < spec.n_target {
        if sessions_run as usize >= opts.max_sessions {
            return Err(Error::Calibration(format!(
                "dataset starved after {sessions_run} sessions: {} failed / {} successful records \
                 of {} per class (N_IF={}, m={}, sigma2={})",
                failed_cols.len(),
                success_cols.len(),
                spec.n_target,
                spec.n_if,
                spec.m,
                spec.prior.sigma2
            )));
        }
        let worst_needed = spec
            .n_target
            .saturating_sub(failed_cols.len().min(success_cols.len()));
        // Assume at least ~35% of sessions land in the scarcer class when
        // sizing a batch; the loop re-evaluates after every batch.
        let estimate = (worst_needed as f64 / spec.n_if as f64 / 0.35).ceil() as usize;
        let batch = estimate
            .clamp(16, opts.batch_cap)
            .min(opts.max_sessions - sessions_run as usize);
        let traces = run_batch(
            code,
            &decoder,
            modem,
            &spec.prior,
            spec.n_if,
            spec.m,
            spec.seed,
            sessions_run,
            batch,
        )?;
        sessions_run += batch as u64;
        for trace in &traces {
            if !trace.reached_round(spec.m) {
                continue; // ACKed before round m.
            }
            let class_cols = if trace.rounds[spec.m].ack {
                &mut success_cols
            } else {
                &mut failed_cols
            };
            if class_cols.len() < spec.n_target {
                class_cols.extend(session_records(trace, spec.m, spec.n_if));
            }
        }
        progress(GenProgress {
            sessions: sessions_run,
            failed_records: failed_cols.len(),
            successful_records: success_cols.len(),
        });
    }

    let build = |cols: Vec<Vec<f64>>, class: DatasetClass| -> Result<PosteriorDataset> {
        Ok(PosteriorDataset {
            class,
            m: spec.m,
            n_if: spec.n_if,
            x: RealMatrix::from_columns(&cols)?,
            provenance: Provenance {
                seed: spec.seed,
                prior: spec.prior,
            },
        })
    };
    Ok((
        build(failed_cols, DatasetClass::Failed)?,
        build(success_cols, DatasetClass::Successful)?,
    ))
}

/// Monte-Carlo failure rate at round m, conditional on reaching round m
/// (rounds 0..m all NACKed). Runs sessions until `trials` qualify, with a
/// 20x attempt cap.
pub fn measure_failure_rate(
    code: &LdpcCode,
    modem: &ModemConfig,
    params: &RicianParams,
    n_if: usize,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let decoder = SumProductDecoder::new(code);
    let mut reached = 0usize;
    let mut failed = 0usize;
    let mut attempts = 0u64;
    let cap = (trials * 20) as u64;
    while reached < trials && attempts < cap {
        let batch = ((trials - reached) * 2).clamp(32, 1000) as u64;
        let batch = batch.min(cap - attempts) as usize;
        let traces = run_batch(code, &decoder, modem, params, n_if, m, seed, attempts, batch)?;
        attempts += batch as u64;
        for t in &traces {
            if t.reached_round(m) {
                reached += 1;
                if !t.rounds[m].ack {
                    failed += 1;
                }
            }
        }
    }
    if reached == 0 {
        // No session survives to round m: every earlier round ACKs, so the
        // conditional failure rate is effectively zero for bracketing.
        return Ok(0.0);
    }
    Ok(failed as f64 / reached as f64)
}

/// Result of a sigma^2 calibration run.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationResult {
    pub sigma2: f64,
    /// Failure rate measured at `sigma2` during the final probe.
    pub achieved_rate: f64,
    /// Number of Monte-Carlo probes spent.
    pub probes: usize,
}

/// Bisection on sigma^2 (the `sigma2` field of `params` is ignored) until the
/// Monte-Carlo round-m failure rate is within 0.05 of `target_fail`.
pub fn calibrate_sigma2(
    code: &LdpcCode,
    modem: &ModemConfig,
    params: &RicianParams,
    n_if: usize,
    m: usize,
    target_fail: f64,
    trials: usize,
    seed: u64,
) -> Result<CalibrationResult> {
    if !(target_fail > 0.0 && target_fail < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target failure rate must lie in (0, 1), got {target_fail}"
        )));
    }
    if trials < 50 {
        return Err(Error::InvalidParameter(
            "calibration needs at least 50 trials per probe".into(),
        ));
    }
    let mut probes = 0usize;
    let mut probe = |sigma2: f64| -> Result<f64> {
        let p = params.with_sigma2(sigma2);
        let rate = measure_failure_rate(
            code,
            modem,
            &p,
            n_if,
            m,
            trials,
            SeededRng::derive_seed(seed, probes as u64),
        )?;
        probes += 1;
        Ok(rate)
    };

    // Geometric bracket expansion from a scale-aware initial guess.
    let mut lo = 0.008 * params.beta * (m + 1) as f64;
    let mut hi = 0.032 * params.beta * (m + 1) as f64;
    let mut rate_lo = probe(lo)?;
    let mut rate_hi = probe(hi)?;
    let mut guard = 0;
    while rate_lo > target_fail {
        lo /= 2.0;
        rate_lo = probe(lo)?;
        guard += 1;
        if guard > 14 {
            return Err(Error::Calibration(format!(
                "no lower bracket: failure rate {rate_lo:.3} > {target_fail} at sigma2={lo:.3e}"
            )));
        }
    }
    guard = 0;
    while rate_hi < target_fail {
        hi *= 2.0;
        rate_hi = probe(hi)?;
        guard += 1;
        if guard > 14 {
            return Err(Error::Calibration(format!(
                "no upper bracket: failure rate {rate_hi:.3} < {target_fail} at sigma2={hi:.3e}"
            )));
        }
    }

    // Bisection in log sigma^2. Accept as soon as a probe lands within a
    // tightened band (leaving re-measurement slack inside the 0.05 contract).
    let mut best = (lo, rate_lo);
    for _ in 0..16 {
        let mid = (lo.ln() + hi.ln()) / 2.0;
        let mid = mid.exp();
        let rate = probe(mid)?;
        if (rate - target_fail).abs() < (best.1 - target_fail).abs() {
            best = (mid, rate);
        }
        if (rate - target_fail).abs() <= 0.025 {
            return Ok(CalibrationResult {
                sigma2: mid,
                achieved_rate: rate,
                probes,
            });
        }
        if rate < target_fail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (best.1 - target_fail).abs() <= 0.05 {
        return Ok(CalibrationResult {
            sigma2: best.0,
            achieved_rate: best.1,
            probes,
        });
    }
    Err(Error::Calibration(format!(
        "bisection did not reach |rate - {target_fail}| <= 0.05; best sigma2={:.4} rate={:.3}",
        best.0, best.1
    )))
}

/// Synthetic dataset drawn straight from the prior law: each record zips
/// m+1 independent Rician gains with m+1 independent CSCG noise samples.
pub fn sample_prior_dataset(
    params: &RicianParams,
    m: usize,
    n: usize,
    seed: u64,
) -> Result<PosteriorDataset> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let stride = m + 1;
    let mut rng = SeededRng::new(seed, 0);
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|_| -> Result<Vec<f64>> {
            let h = sample_rician(params, stride, &mut rng)?;
            let nz = sample_cscg(params.sigma2, stride, &mut rng)?;
            let mut rec = vec![0.0; 4 * stride];
            for r in 0..stride {
                rec[r] = h[r].re;
                rec[stride + r] = h[r].im;
                rec[2 * stride + r] = nz[r].re;
                rec[3 * stride + r] = nz[r].im;
            }
            Ok(rec)
        })
        .collect::<Result<_>>()?;
    Ok(PosteriorDataset {
        class: DatasetClass::Prior,
        m,
        n_if: 0,
        x: RealMatrix::from_columns(&cols)?,
        provenance: Provenance {
            seed,
            prior: *params,
        },
    })
}

/// Per-round 64-QAM symbol relabeling, one of the spec's external interfaces:
/// the mapping design itself is supplied from outside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingTable {
    map: [u8; 64],
}

impl MappingTable {
    pub fn identity() -> Self {
        let mut map = [0u8; 64];
        for (i, v) in map.iter_mut().enumerate() {
            *v = i as u8;
        }
        MappingTable { map }
    }

    pub fn from_map(map: [u8; 64]) -> Result<Self> {
        let mut seen = [false; 64];
        for &v in &map {
            if v > 63 || seen[v as usize] {
                return Err(Error::Config(
                    "mapping table is not a bijection on 0..64".into(),
                ));
            }
            seen[v as usize] = true;
        }
        Ok(MappingTable { map })
    }

    /// Parses a 64-line text file of `source target` label pairs
    /// (`source -> target` also accepted).
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let label = path.display().to_string();
        let mut map = [255u8; 64];
        let mut assigned = [false; 64];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cleaned = line.replace("->", " ");
            let mut parts = cleaned.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                let tok = tok.ok_or_else(|| Error::Parse {
                    path: label.clone(),
                    line: lineno + 1,
                    message: "expected `source target` pair".into(),
                })?;
                let v: usize = tok.parse().map_err(|_| Error::Parse {
                    path: label.clone(),
                    line: lineno + 1,
                    message: format!("bad label {tok:?}"),
                })?;
                if v > 63 {
                    return Err(Error::Parse {
                        path: label.clone(),
                        line: lineno + 1,
                        message: format!("label {v} out of 0..64"),
                    });
                }
                Ok(v)
            };
            let src = parse(parts.next())?;
            let dst = parse(parts.next())?;
            if assigned[src] {
                return Err(Error::Parse {
                    path: label.clone(),
                    line: lineno + 1,
                    message: format!("label {src} mapped twice"),
                });
            }
            assigned[src] = true;
            map[src] = dst as u8;
        }
        if assigned.iter().any(|&a| !a) {
            return Err(Error::Config(format!(
                "{label}: mapping table must define all 64 labels"
            )));
        }
        Self::from_map(map)
    }

    #[inline]
    pub fn apply(&self, label: u8) -> u8 {
        self.map[label as usize]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = [0u8; 64];
        for (src, &dst) in self.map.iter().enumerate() {
            inv[dst as usize] = src as u8;
        }
        MappingTable { map: inv }
    }
}

/// Outcome of the parameter-mismatch BER harness.
#[derive(Debug, Clone)]
pub struct MismatchBerResult {
    /// Uncoded BER after Chase-combining rounds 0..=m, indexed by m.
    pub per_round_ber: Vec<f64>,
    pub symbols: usize,
    /// Parameters the (external) mapping design assumed; metadata only, the
    /// Monte-Carlo runs entirely under `truth`.
    pub design: RicianParams,
    pub truth: RicianParams,
}

/// Monte-Carlo uncoded BER of ML Chase-combined 64-QAM detection under
/// `truth`, applying the supplied per-round symbol remappings. `design` is
/// carried through to the result for reporting and does not influence the
/// simulation.
pub fn mismatch_ber_harness(
    design: &RicianParams,
    truth: &RicianParams,
    maps: &[MappingTable],
    m_max: usize,
    symbols: usize,
    rng: &mut SeededRng,
) -> Result<MismatchBerResult> {
    design.validate()?;
    truth.validate()?;
    if maps.len() != m_max + 1 {
        return Err(Error::Config(format!(
            "need {} mapping tables for m_max={m_max}, got {}",
            m_max + 1,
            maps.len()
        )));
    }
    if symbols < 10_000 {
        return Err(Error::InvalidParameter(format!(
            "BER harness needs at least 10^4 symbols, got {symbols}"
        )));
    }
    let modem = ModemConfig::qam64_gray();
    let points = modem.points();
    let mut bit_errors = vec![0u64; m_max + 1];
    for _ in 0..symbols {
        let label = (rng.next_u64() & 63) as u8;
        let mut metric = [0.0f64; 64];
        for (round, map) in maps.iter().enumerate() {
            let h = sample_rician(truth, 1, rng)?[0];
            let n = sample_cscg(truth.sigma2, 1, rng)?[0];
            let y = h * points[map.apply(label) as usize] + n;
            for (cand, m_acc) in metric.iter_mut().enumerate() {
                *m_acc += (y - h * points[map.apply(cand as u8) as usize]).norm_sqr();
            }
            let best = metric
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).expect("metrics are finite"))
                .map(|(l, _)| l as u8)
                .expect("64 candidates");
            bit_errors[round] += u64::from((best ^ label).count_ones());
        }
    }
    let denom = (symbols * 6) as f64;
    Ok(MismatchBerResult {
        per_round_ber: bit_errors.iter().map(|&e| e as f64 / denom).collect(),
        symbols,
        design: *design,
        truth: *truth,
    })
}
