//! Flooding-schedule sum-product LDPC decoder.
//!
//! Messages live on a flat edge array grouped by check node, with a parallel
//! index grouped by variable node. Check updates use forward/backward partial
//! products of tanh(q/2) so no division by near-zero terms occurs. Input and
//! internal LLRs are clamped to +-CLAMP_LLR; the product is clamped away from
//! +-1 before atanh.

use super::code::LdpcCode;

const CLAMP_LLR: f64 = 30.0;
const MAX_TANH: f64 = 1.0 - 1e-13;

/// Outcome of one decoding attempt. `converged` means every parity check was
/// satisfied at some iteration; `bits` is the hard decision either way.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    pub bits: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SumProductDecoder {
    n_vars: usize,
    /// Edge layout grouped by check: edges of check c are
    /// edge_var[check_start[c]..check_start[c+1]].
    check_start: Vec<u32>,
    edge_var: Vec<u32>,
    /// Same edges indexed per variable: edge ids grouped by variable.
    var_start: Vec<u32>,
    var_edges: Vec<u32>,
}

impl SumProductDecoder {
    pub fn new(code: &LdpcCode) -> Self {
        let n_vars = code.block_len();
        let mut check_start = Vec::with_capacity(code.n_checks() + 1);
        let mut edge_var = Vec::new();
        check_start.push(0u32);
        for vars in code.check_neighbors() {
            edge_var.extend_from_slice(vars);
            check_start.push(edge_var.len() as u32);
        }
        let mut per_var: Vec<Vec<u32>> = vec![Vec::new(); n_vars];
        for (e, &v) in edge_var.iter().enumerate() {
            per_var[v as usize].push(e as u32);
        }
        let mut var_start = Vec::with_capacity(n_vars + 1);
        let mut var_edges = Vec::new();
        var_start.push(0u32);
        for list in per_var {
            var_edges.extend_from_slice(&list);
            var_start.push(var_edges.len() as u32);
        }
        SumProductDecoder {
            n_vars,
            check_start,
            edge_var,
            var_start,
            var_edges,
        }
    }

    fn parity_ok(&self, bits: &[u8]) -> bool {
        (0..self.check_start.len() - 1).all(|c| {
            let (s, e) = (self.check_start[c] as usize, self.check_start[c + 1] as usize);
            self.edge_var[s..e]
                .iter()
                .fold(0u8, |acc, &v| acc ^ bits[v as usize])
                == 0
        })
    }

    /// Decodes the given per-bit LLRs (positive favors bit 0). Non-convergence
    /// within `max_iters` is a valid outcome reported through the flag.
    /// Convergence requires every parity check satisfied and a nonzero
    /// posterior on every bit; an exactly-zero LLR leaves the hard decision
    /// arbitrary, so all-zero input reports non-convergence.
    pub fn decode(&self, llrs: &[f64], max_iters: usize) -> DecodeOutput {
        assert_eq!(llrs.len(), self.n_vars, "LLR length must equal block length");
        let n_edges = self.edge_var.len();
        let n_checks = self.check_start.len() - 1;

        let mut bits: Vec<u8> = llrs.iter().map(|&l| (l < 0.0) as u8).collect();
        if llrs.iter().all(|&l| l != 0.0) && self.parity_ok(&bits) {
            return DecodeOutput {
                bits,
                converged: true,
                iterations: 0,
            };
        }

        let clamp = |x: f64| x.clamp(-CLAMP_LLR, CLAMP_LLR);
        let mut v2c: Vec<f64> = self
            .edge_var
            .iter()
            .map(|&v| clamp(llrs[v as usize]))
            .collect();
        let mut c2v = vec![0.0f64; n_edges];
        let mut scratch_t = Vec::with_capacity(32);
        let mut scratch_suffix = Vec::with_capacity(32);

        for iteration in 1..=max_iters {
            // Check-node update.
            for c in 0..n_checks {
                let (s, e) = (self.check_start[c] as usize, self.check_start[c + 1] as usize);
                let deg = e - s;
                scratch_t.clear();
                scratch_t.extend(v2c[s..e].iter().map(|&q| (0.5 * q).tanh()));
                scratch_suffix.clear();
                scratch_suffix.resize(deg + 1, 1.0);
                for i in (0..deg).rev() {
                    scratch_suffix[i] = scratch_suffix[i + 1] * scratch_t[i];
                }
                let mut prefix = 1.0f64;
                for i in 0..deg {
                    let excl = prefix * scratch_suffix[i + 1];
                    c2v[s + i] = 2.0 * excl.clamp(-MAX_TANH, MAX_TANH).atanh();
                    prefix *= scratch_t[i];
                }
            }
            // Variable-node update and posterior hard decision.
            let mut all_decided = true;
            for v in 0..self.n_vars {
                let (s, e) = (self.var_start[v] as usize, self.var_start[v + 1] as usize);
                let mut total = llrs[v];
                for &eid in &self.var_edges[s..e] {
                    total += c2v[eid as usize];
                }
                bits[v] = (total < 0.0) as u8;
                all_decided &= total != 0.0;
                for &eid in &self.var_edges[s..e] {
                    v2c[eid as usize] = clamp(total - c2v[eid as usize]);
                }
            }
            if all_decided && self.parity_ok(&bits) {
                return DecodeOutput {
                    bits,
                    converged: true,
                    iterations: iteration,
                };
            }
        }
        DecodeOutput {
            bits,
            converged: false,
            iterations: max_iters,
        }
    }
}
