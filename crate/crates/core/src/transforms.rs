//! Sequence-level transformations: composition with an increasing,
//! polynomial-time-invertible index map `g`, the witness lift `f'`, and the
//! μ↔λ transfer verification over square-part decompositions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correlate::Sequence;
use crate::seqkernel::{self, SeqBlock, SeqError, SeqKind};
use crate::testlang::{LangError, TernExpr, TestFn};

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("affine scale must be at least 1")]
    BadAffineScale,
    #[error("g(x_min) = {value} is below 1; shrink the domain or shift b")]
    RangeBelowOne { value: i64 },
    #[error("polynomial map needs a positive coefficient of degree >= 1")]
    NotIncreasing,
    #[error("g overflows u64 at x = {x}")]
    Overflow { x: u64 },
    #[error("x = {x} is below the domain start x_min = {x_min}")]
    DomainBelowMin { x: u64, x_min: u64 },
    #[error("g({x}) = {y} is outside the available sequence data")]
    OutOfData { x: u64, y: u64 },
    #[error("transfer check needs n_max >= 4, got {0}")]
    RangeTooSmall(u64),
    #[error("transfer check supports n_max below 2^32, got {0}")]
    RangeTooLarge(u64),
    #[error("truncation index n0 must be at least 1")]
    BadTruncation,
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Seq(#[from] SeqError),
}

/// An increasing index map `g` with decidable range and exact inversion.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GSpec {
    /// `g(x) = a*x + b` on `x >= x_min`, with `a >= 1` and `g(x_min) >= 1`.
    Affine { a: u64, b: i64, x_min: u64 },
    /// `g(x) = sum_d coeffs[d] * x^d` on `x >= x_min`; all coefficients are
    /// nonnegative and at least one of degree >= 1 is positive, so the map
    /// is strictly increasing. Inverted by binary search.
    Poly { coeffs: Vec<u64>, x_min: u64 },
}

impl GSpec {
    pub fn affine(a: u64, b: i64, x_min: u64) -> Result<GSpec, TransformError> {
        if a == 0 {
            return Err(TransformError::BadAffineScale);
        }
        let at_min = (a as i128) * (x_min as i128) + b as i128;
        if at_min < 1 {
            return Err(TransformError::RangeBelowOne { value: at_min as i64 });
        }
        Ok(GSpec::Affine { a, b, x_min })
    }

    pub fn poly(coeffs: Vec<u64>, x_min: u64) -> Result<GSpec, TransformError> {
        if coeffs.iter().skip(1).all(|&c| c == 0) {
            return Err(TransformError::NotIncreasing);
        }
        let g = GSpec::Poly { coeffs, x_min };
        match g.apply(x_min) {
            Ok(v) if v >= 1 => Ok(g),
            Ok(v) => Err(TransformError::RangeBelowOne { value: v as i64 }),
            Err(e) => Err(e),
        }
    }

    pub fn identity() -> GSpec {
        GSpec::Affine { a: 1, b: 0, x_min: 1 }
    }

    pub fn x_min(&self) -> u64 {
        match self {
            GSpec::Affine { x_min, .. } | GSpec::Poly { x_min, .. } => *x_min,
        }
    }

    /// `g(x)`; errors when `x` is below the domain or the value overflows.
    pub fn apply(&self, x: u64) -> Result<u64, TransformError> {
        if x < self.x_min() {
            return Err(TransformError::DomainBelowMin { x, x_min: self.x_min() });
        }
        match self {
            GSpec::Affine { a, b, .. } => {
                let v = (*a as i128) * (x as i128) + *b as i128;
                u64::try_from(v).map_err(|_| TransformError::Overflow { x })
            }
            GSpec::Poly { coeffs, .. } => {
                let mut acc: u128 = 0;
                for &c in coeffs.iter().rev() {
                    acc = acc
                        .checked_mul(x as u128)
                        .and_then(|m| m.checked_add(c as u128))
                        .ok_or(TransformError::Overflow { x })?;
                }
                u64::try_from(acc).map_err(|_| TransformError::Overflow { x })
            }
        }
    }

    /// Exact inverse: `Some(x)` iff `y = g(x)` for some `x` in the domain.
    pub fn invert(&self, y: u64) -> Option<u64> {
        match self {
            GSpec::Affine { a, b, x_min } => {
                let shifted = (y as i128) - (*b as i128);
                if shifted < 0 || shifted % (*a as i128) != 0 {
                    return None;
                }
                let x = u64::try_from(shifted / (*a as i128)).ok()?;
                (x >= *x_min).then_some(x)
            }
            GSpec::Poly { x_min, .. } => {
                // g is strictly increasing, so binary search on [x_min, hi].
                let mut lo = *x_min;
                if self.apply(lo).ok()? > y {
                    return None;
                }
                let mut hi = lo.max(1);
                while self.apply(hi).map_or(false, |v| v < y) {
                    lo = hi;
                    hi = hi.saturating_mul(2);
                }
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    match self.apply(mid) {
                        Ok(v) if v < y => lo = mid + 1,
                        _ => hi = mid,
                    }
                }
                (self.apply(lo).ok() == Some(y)).then_some(lo)
            }
        }
    }

    pub fn range_contains(&self, y: u64) -> bool {
        self.invert(y).is_some()
    }

    /// Whether the range of `g` has positive natural density. Degree-two and
    /// higher polynomial maps have density-zero ranges; callers should warn
    /// rather than reject.
    pub fn range_has_positive_density(&self) -> bool {
        match self {
            GSpec::Affine { .. } => true,
            GSpec::Poly { coeffs, .. } => coeffs.iter().skip(2).all(|&c| c == 0),
        }
    }
}

/// `s'(x) = s(g(x))` over `x` in `[lo, hi)`, materialized as a custom block.
pub fn compose_g(s: &dyn Sequence, g: &GSpec, lo: u64, hi: u64) -> Result<SeqBlock, TransformError> {
    if lo >= hi {
        return Err(SeqError::EmptyRange { lo, hi }.into());
    }
    let mut values = Vec::with_capacity((hi - lo) as usize);
    for x in lo..hi {
        let y = g.apply(x)?;
        if y < s.first() || s.last().map_or(false, |last| y > last) {
            return Err(TransformError::OutOfData { x, y });
        }
        values.push(s.value(y));
    }
    Ok(SeqBlock::from_values(lo, SeqKind::Custom, &values)?)
}

/// The witness lift: `f'(n) = f(g^-1(n))` when `n >= n0` and `n` is in the
/// range of `g`, and `0` elsewhere.
pub fn lift_witness(f: &TestFn, g: &GSpec, n0: u64) -> Result<TestFn, TransformError> {
    let inner = f.as_ternary().ok_or(LangError::TernaryRequired)?;
    Ok(TestFn::Ternary(TernExpr::Lift {
        g: Box::new(g.clone()),
        n0,
        inner: Box::new(inner.clone()),
    }))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransferCounterexample {
    pub n: u64,
    pub k: u64,
    pub i: u64,
    pub lambda_n: i8,
    pub mu_i: i8,
}

/// Outcome of the μ↔λ transfer verification.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransferReport {
    pub n_max: u64,
    pub n0: u64,
    pub checked: u64,
    pub counterexamples: Vec<TransferCounterexample>,
    /// Integral bound on the truncation mass: `sum_{k>n0} k^-2 < 1/n0`.
    pub tail_bound: f64,
    /// Partial sum of `k^-2` for `n0 < k <= n_max` (always below the bound).
    pub tail_partial: f64,
}

impl TransferReport {
    pub fn pass(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Verifies `λ(n) = μ(i)` for every `n = k^2 * i <= n_max` with `i`
/// squarefree, reading λ and μ from sieved blocks and the decomposition
/// from a smallest-prime-factor table.
pub fn mu_lambda_transfer_check(n_max: u64, n0: u64) -> Result<TransferReport, TransformError> {
    if n_max < 4 {
        return Err(TransformError::RangeTooSmall(n_max));
    }
    if n_max >= u32::MAX as u64 {
        return Err(TransformError::RangeTooLarge(n_max));
    }
    if n0 == 0 {
        return Err(TransformError::BadTruncation);
    }
    let lambda = seqkernel::sieve_range(1, n_max + 1, SeqKind::Liouville)?;
    let mobius = seqkernel::sieve_range(1, n_max + 1, SeqKind::Mobius)?;
    let spf = seqkernel::spf_sieve(n_max as usize);

    let mut counterexamples = Vec::new();
    for n in 1..=n_max {
        let (k, i) = square_split_spf(n, &spf);
        debug_assert_eq!(k * k * i, n);
        let lambda_n = lambda.get(n);
        let mu_i = mobius.get(i);
        if lambda_n != mu_i {
            counterexamples.push(TransferCounterexample { n, k, i, lambda_n, mu_i });
        }
    }

    let tail_partial: f64 = ((n0 + 1)..=n_max).map(|k| 1.0 / (k as f64 * k as f64)).sum();
    Ok(TransferReport {
        n_max,
        n0,
        checked: n_max,
        counterexamples,
        tail_bound: 1.0 / n0 as f64,
        tail_partial,
    })
}

fn square_split_spf(n: u64, spf: &[u32]) -> (u64, u64) {
    let mut rest = n as usize;
    let mut k = 1u64;
    let mut i = 1u64;
    while rest > 1 {
        let p = spf[rest] as usize;
        let mut e = 0u32;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        k *= (p as u64).pow(e / 2);
        if e % 2 == 1 {
            i *= p as u64;
        }
    }
    (k, i)
}
