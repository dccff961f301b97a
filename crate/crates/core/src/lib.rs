//! Number-theoretic sequence laboratory: sieved Liouville/Möbius blocks, a
//! small DSL of polynomial-time test functions, correlation and martingale
//! statistics, natural-density and chain-density estimators, and a hard-core
//! bit PRG built from Rabin squaring.

pub mod correlate;
pub mod density;
pub mod hcprg;
pub mod seqkernel;
pub mod testlang;
pub mod transforms;
