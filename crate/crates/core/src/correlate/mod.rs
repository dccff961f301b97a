//! Correlation statistics between a sequence source and test functions:
//! checkpointed partial sums under three normalizations, the p-biased
//! variant, betting-martingale evaluation, and test batteries.

mod battery;
mod martingale;
mod trace;

pub use battery::{battery, default_battery, BatteryEntry, BatteryReport};
pub use martingale::{fairness_holds, run_martingale, BettingRule, MartingaleSpec, MartingaleTrace};
pub use trace::{biased_statistic, correlate, BiasedPoint, BiasedTrace, CorrelationTrace, TracePoint};

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::seqkernel::SeqBlock;
use crate::testlang::{Dyadic, LangError, TestFn};

#[derive(Debug, Error)]
pub enum CorrelateError {
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("bias p must lie strictly between 0 and 1, got {0}")]
    BadBias(f64),
    #[error("checkpoint plan is empty")]
    EmptyPlan,
    #[error("checkpoints must be strictly increasing and at least 1")]
    PlanNotIncreasing,
    #[error("checkpoint {checkpoint} is beyond the available data (last n = {last})")]
    CheckpointBeyondData { checkpoint: u64, last: u64 },
    #[error("sequence data begins at n = {first}; sums need coverage from n = 1")]
    SourceStartsLate { first: u64 },
    #[error("sequence value 0 at n = {n}; this operation needs a ±1-valued source")]
    NonBinaryValue { n: u64 },
    #[error("betting rule value {value} at n = {n} is outside [-1, 1]")]
    StakeOutOfRange { n: u64, value: String },
    #[error("initial capital must be positive")]
    NonPositiveCapital,
    #[error("battery has no tests")]
    EmptyBattery,
    #[error("no checkpoints beyond the burn-in {burn_in}")]
    NoCheckpointsBeyondBurnIn { burn_in: u64 },
    #[error(transparent)]
    Lang(#[from] LangError),
}

/// Read access to a `{-1, 0, +1}`-valued sequence on a contiguous index
/// range `[first, last]` (unbounded when `last` is `None`).
pub trait Sequence: Sync {
    /// Value at `n`; callers keep `n` within the advertised range.
    fn value(&self, n: u64) -> i8;
    fn first(&self) -> u64;
    fn last(&self) -> Option<u64>;
}

impl Sequence for SeqBlock {
    fn value(&self, n: u64) -> i8 {
        self.get(n)
    }

    fn first(&self) -> u64 {
        self.lo().max(1)
    }

    fn last(&self) -> Option<u64> {
        Some(self.hi() - 1)
    }
}

/// A ternary test function viewed as a sequence.
pub struct TestFnSeq {
    f: TestFn,
}

impl TestFnSeq {
    pub fn new(f: TestFn) -> Result<Self, CorrelateError> {
        if !f.is_ternary() {
            return Err(LangError::TernaryRequired.into());
        }
        Ok(TestFnSeq { f })
    }
}

impl Sequence for TestFnSeq {
    fn value(&self, n: u64) -> i8 {
        self.f.eval_ternary(n).expect("ternary checked at construction")
    }

    fn first(&self) -> u64 {
        1
    }

    fn last(&self) -> Option<u64> {
        None
    }
}

/// Constant sequence, mostly for tests and calibration.
pub struct ConstSeq(pub i8);

impl Sequence for ConstSeq {
    fn value(&self, _n: u64) -> i8 {
        self.0
    }

    fn first(&self) -> u64 {
        1
    }

    fn last(&self) -> Option<u64> {
        None
    }
}

/// Periodic repetition of a fixed pattern, indexed from n = 1.
pub struct PeriodicSeq(pub Vec<i8>);

impl Sequence for PeriodicSeq {
    fn value(&self, n: u64) -> i8 {
        self.0[((n - 1) % self.0.len() as u64) as usize]
    }

    fn first(&self) -> u64 {
        1
    }

    fn last(&self) -> Option<u64> {
        None
    }
}

/// The prefix lengths at which statistics are recorded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckpointPlan(Vec<u64>);

impl CheckpointPlan {
    pub fn explicit(checkpoints: Vec<u64>) -> Result<Self, CorrelateError> {
        if checkpoints.is_empty() {
            return Err(CorrelateError::EmptyPlan);
        }
        if checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CorrelateError::PlanNotIncreasing);
        }
        Ok(CheckpointPlan(checkpoints))
    }

    /// Powers of two up to `n_max`, with `n_max` itself appended when it is
    /// not one of them.
    pub fn powers_of_two(n_max: u64) -> Result<Self, CorrelateError> {
        if n_max < 2 {
            return Err(CorrelateError::EmptyPlan);
        }
        let mut points = Vec::new();
        let mut k = 2u64;
        while k <= n_max {
            points.push(k);
            match k.checked_mul(2) {
                Some(next) => k = next,
                None => break,
            }
        }
        if *points.last().unwrap() != n_max {
            points.push(n_max);
        }
        CheckpointPlan::explicit(points)
    }

    pub fn checkpoints(&self) -> &[u64] {
        &self.0
    }

    pub fn max(&self) -> u64 {
        *self.0.last().expect("plans are nonempty")
    }

    /// Validates that a source covers `[1, max]`.
    pub(crate) fn validate_against(&self, s: &dyn Sequence) -> Result<(), CorrelateError> {
        if s.first() > 1 {
            return Err(CorrelateError::SourceStartsLate { first: s.first() });
        }
        if let Some(last) = s.last() {
            if self.max() > last {
                return Err(CorrelateError::CheckpointBeyondData { checkpoint: self.max(), last });
            }
        }
        Ok(())
    }
}

/// Exact running sum of dyadic terms over a fixed denominator `2^exp`.
///
/// Stored as an i128 numerator, so 10^8 terms of magnitude up to 1 fit
/// with denominators up to 2^32 and far beyond.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RawSum {
    num: i128,
    exp: u32,
}

impl RawSum {
    pub fn zero(exp: u32) -> RawSum {
        RawSum { num: 0, exp }
    }

    /// Adds a term whose denominator exponent is at most `self.exp`.
    pub fn add_term(&mut self, term: Dyadic) {
        debug_assert!(term.exp() <= self.exp, "term denominator exceeds accumulator");
        self.num += (term.num() as i128) << (self.exp - term.exp());
    }

    /// Combines two partial sums over the same denominator; the basis for
    /// parallel per-block accumulation.
    pub fn combine(a: RawSum, b: RawSum) -> RawSum {
        assert_eq!(a.exp, b.exp, "mismatched accumulator denominators");
        RawSum { num: a.num + b.num, exp: a.exp }
    }

    pub fn numerator(&self) -> i128 {
        self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / (2f64).powi(self.exp as i32)
    }

    pub fn is_integer(&self) -> bool {
        self.reduced().1 == 0
    }

    fn reduced(&self) -> (i128, u32) {
        let mut num = self.num;
        let mut exp = self.exp;
        while exp > 0 && num % 2 == 0 {
            num /= 2;
            exp -= 1;
        }
        if num == 0 {
            exp = 0;
        }
        (num, exp)
    }

    /// Exact rational rendering: an integer, or `p/q` with `q` a power of
    /// two in lowest terms.
    pub fn to_rational_string(&self) -> String {
        let (num, exp) = self.reduced();
        if exp == 0 {
            num.to_string()
        } else {
            format!("{}/{}", num, 1u128 << exp)
        }
    }
}

impl Serialize for RawSum {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_rational_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plans() {
        let p = CheckpointPlan::powers_of_two(100).unwrap();
        assert_eq!(p.checkpoints(), &[2, 4, 8, 16, 32, 64, 100]);
        let p = CheckpointPlan::powers_of_two(64).unwrap();
        assert_eq!(p.checkpoints(), &[2, 4, 8, 16, 32, 64]);
        assert!(CheckpointPlan::explicit(vec![]).is_err());
        assert!(CheckpointPlan::explicit(vec![0, 4]).is_err());
        assert!(CheckpointPlan::explicit(vec![4, 4]).is_err());
    }

    #[test]
    fn raw_sum_exactness() {
        let mut acc = RawSum::zero(3);
        acc.add_term(Dyadic::ratio(3, 8).unwrap());
        acc.add_term(Dyadic::ratio(-1, 2).unwrap());
        acc.add_term(Dyadic::ONE);
        assert_eq!(acc.to_rational_string(), "7/8");
        acc.add_term(Dyadic::ratio(1, 8).unwrap());
        assert_eq!(acc.to_rational_string(), "1");
        assert!(acc.is_integer());
        assert_eq!(acc.to_f64(), 1.0);
    }

    #[test]
    fn periodic_sequence_indexing() {
        let s = PeriodicSeq(vec![1, 1, 1, -1]);
        assert_eq!(s.value(1), 1);
        assert_eq!(s.value(4), -1);
        assert_eq!(s.value(8), -1);
        assert_eq!(s.value(5), 1);
    }
}
