//! The LDPC-coded 64-QAM physical layer: code construction and encoding,
//! Gray modulation, Chase-combining soft demapping, sum-product decoding,
//! and the per-session ACK/NACK protocol loop.

pub mod code;
pub mod decoder;
pub mod modem;
pub mod session;

pub use code::LdpcCode;
pub use decoder::{DecodeOutput, SumProductDecoder};
pub use modem::{chase_llr, ModemConfig, BITS_PER_SYMBOL};
pub use session::{run_session, RoundTrace, SessionTrace, MAX_BP_ITERATIONS};
