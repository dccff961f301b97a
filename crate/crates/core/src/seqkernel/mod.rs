//! Arithmetic sequence kernel: segmented sieving of the Liouville and
//! Möbius functions into bit-packed blocks, plus a factorization-based
//! single-value path for spot checks.

mod block;
mod factor;
mod io;
mod sieve;

pub use block::{SeqBlock, SeqKind};
pub use factor::{factorize, spf_sieve, value_at, FactorView};
pub use io::{block_from_bytes, block_to_bytes, load_block, save_block, FORMAT_MAGIC, FORMAT_VERSION};
pub use sieve::{sieve_range, sieve_range_with_window, DEFAULT_WINDOW, MAX_BLOCK_LEN, MAX_HI};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeqError {
    #[error("n = 0 is outside the sequence domain (sequences are defined for n >= 1)")]
    ZeroOutOfDomain,
    #[error("invalid range [{lo}, {hi}): lo must be strictly below hi")]
    EmptyRange { lo: u64, hi: u64 },
    #[error("hi = {hi} exceeds the configured maximum {max}")]
    RangeTooHigh { hi: u64, max: u64 },
    #[error("block of {len} values exceeds the block size budget of {max}")]
    BlockTooLarge { len: u64, max: u64 },
    #[error("value {value} at n = {n} is not a ternary value in {{-1, 0, +1}}")]
    BadTernary { value: i8, n: u64 },
    #[error("kind {kind:?} forbids value {value} at n = {n}")]
    KindViolation { kind: SeqKind, value: i8, n: u64 },
    #[error("kind {0:?} has no defining arithmetic rule to sieve")]
    NotSievable(SeqKind),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes: not a PRSEQ1 block file")]
    BadMagic,
    #[error("unsupported format version {0:#04x}")]
    BadVersion(u8),
    #[error("unknown sequence kind byte {0:#04x}")]
    BadKindByte(u8),
    #[error("file length mismatch: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("reserved ternary code 0b11 at n = {n}")]
    ReservedCode { n: u64 },
}
