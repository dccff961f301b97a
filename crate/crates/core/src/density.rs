//! Natural-density machinery: counting densities along a checkpoint set K,
//! conditional densities along a nested chain of sets, the event-measure
//! estimator built from the chain density, and the bundled fact checks
//! (exact finite additivity and the pseudorandom splitting laws).
//!
//! Counts follow the convention `|X ∩ [0, k)|`, so index 0 participates;
//! sequence-backed and test-backed sets treat 0 as a non-member since the
//! sequences are defined from n = 1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seqkernel::{SeqBlock, SeqKind};
use crate::testlang::TestFn;

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("checkpoint plan is empty")]
    EmptyPlan,
    #[error("checkpoints must be strictly increasing and at least 1")]
    PlanNotIncreasing,
    #[error("set refers to the {0} sequence but no block for it was supplied")]
    MissingSequence(SeqKind),
    #[error("set needs {kind} data at n = {n}, outside the supplied block")]
    SequenceGap { kind: SeqKind, n: u64 },
    #[error("membership test functions must be ternary-typed")]
    NonTernaryTest,
    #[error("chain is empty")]
    EmptyChain,
    #[error("chain level {level} is not contained in the previous level (witness n = {witness})")]
    ChainNotNested { level: usize, witness: u64 },
    #[error("chain level {depth} has zero count at the cap; its density is empirically zero")]
    ZeroLevelDensity { depth: usize },
    #[error("sets X and Y are not disjoint (witness n = {witness})")]
    NotDisjoint { witness: u64 },
}

/// A decidable membership predicate over the naturals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetSpec {
    All,
    Empty,
    /// `n % modulus == residue`.
    Residue { modulus: u64, residue: u64 },
    /// Perfect squares (density zero; handy for difference tests).
    PerfectSquares,
    /// Membership iff the ternary test function evaluates to +1.
    Test(TestFn),
    /// Membership iff the cached sequence takes `value` at `n`.
    Sequence { kind: SeqKind, value: i8 },
    Complement(Box<SetSpec>),
    Union(Box<SetSpec>, Box<SetSpec>),
    Intersect(Box<SetSpec>, Box<SetSpec>),
}

impl SetSpec {
    pub fn multiples_of(m: u64) -> SetSpec {
        SetSpec::Residue { modulus: m, residue: 0 }
    }

    pub fn evens() -> SetSpec {
        SetSpec::multiples_of(2)
    }

    pub fn odds() -> SetSpec {
        SetSpec::Residue { modulus: 2, residue: 1 }
    }

    pub fn union(a: SetSpec, b: SetSpec) -> SetSpec {
        SetSpec::Union(Box::new(a), Box::new(b))
    }

    pub fn intersect(a: SetSpec, b: SetSpec) -> SetSpec {
        SetSpec::Intersect(Box::new(a), Box::new(b))
    }

    pub fn complement(a: SetSpec) -> SetSpec {
        SetSpec::Complement(Box::new(a))
    }

    /// `X △ Y`, the symmetric difference.
    pub fn symmetric_difference(a: SetSpec, b: SetSpec) -> SetSpec {
        SetSpec::union(
            SetSpec::intersect(a.clone(), SetSpec::complement(b.clone())),
            SetSpec::intersect(b, SetSpec::complement(a)),
        )
    }

    fn validate(&self, store: &SeqStore) -> Result<(), DensityError> {
        match self {
            SetSpec::Test(f) if !f.is_ternary() => Err(DensityError::NonTernaryTest),
            SetSpec::Sequence { kind, .. } => {
                if store.block(*kind).is_none() {
                    Err(DensityError::MissingSequence(*kind))
                } else {
                    Ok(())
                }
            }
            SetSpec::Complement(a) => a.validate(store),
            SetSpec::Union(a, b) | SetSpec::Intersect(a, b) => {
                a.validate(store)?;
                b.validate(store)
            }
            _ => Ok(()),
        }
    }

    /// Membership at `n`. Call `validate` first; gaps in sequence data are
    /// still reported per call.
    pub fn contains(&self, n: u64, store: &SeqStore) -> Result<bool, DensityError> {
        Ok(match self {
            SetSpec::All => true,
            SetSpec::Empty => false,
            SetSpec::Residue { modulus, residue } => n % modulus == *residue,
            SetSpec::PerfectSquares => {
                let r = n.isqrt();
                r * r == n
            }
            SetSpec::Test(f) => n >= 1 && f.eval_ternary(n) == Some(1),
            SetSpec::Sequence { kind, value } => {
                if n == 0 {
                    false
                } else {
                    let block = store.block(*kind).ok_or(DensityError::MissingSequence(*kind))?;
                    let v =
                        block.try_get(n).ok_or(DensityError::SequenceGap { kind: *kind, n })?;
                    v == *value
                }
            }
            SetSpec::Complement(a) => !a.contains(n, store)?,
            SetSpec::Union(a, b) => a.contains(n, store)? || b.contains(n, store)?,
            SetSpec::Intersect(a, b) => a.contains(n, store)? && b.contains(n, store)?,
        })
    }
}

impl std::fmt::Display for SetSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SetSpec::All => write!(f, "all"),
            SetSpec::Empty => write!(f, "empty"),
            SetSpec::Residue { modulus, residue } => write!(f, "n % {modulus} == {residue}"),
            SetSpec::PerfectSquares => write!(f, "squares"),
            SetSpec::Test(t) => write!(f, "test({t})"),
            SetSpec::Sequence { kind, value } => write!(f, "{kind}(n) = {value:+}"),
            SetSpec::Complement(a) => write!(f, "not ({a})"),
            SetSpec::Union(a, b) => write!(f, "({a}) or ({b})"),
            SetSpec::Intersect(a, b) => write!(f, "({a}) and ({b})"),
        }
    }
}

/// Read-only registry of cached sequence blocks, keyed by kind.
#[derive(Default)]
pub struct SeqStore<'a> {
    blocks: Vec<&'a SeqBlock>,
}

impl<'a> SeqStore<'a> {
    pub fn empty() -> SeqStore<'a> {
        SeqStore { blocks: Vec::new() }
    }

    pub fn with(blocks: &[&'a SeqBlock]) -> SeqStore<'a> {
        SeqStore { blocks: blocks.to_vec() }
    }

    pub fn block(&self, kind: SeqKind) -> Option<&'a SeqBlock> {
        self.blocks.iter().copied().find(|b| b.kind() == kind)
    }
}

/// Checkpoint set K: the prefix lengths `k` at which `|X ∩ [0, k)| / k`
/// is recorded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KPlan(Vec<u64>);

impl KPlan {
    pub fn explicit(checkpoints: Vec<u64>) -> Result<KPlan, DensityError> {
        if checkpoints.is_empty() {
            return Err(DensityError::EmptyPlan);
        }
        if checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DensityError::PlanNotIncreasing);
        }
        Ok(KPlan(checkpoints))
    }

    /// The default K: `k_m = 2^m` for `2^m <= cap`.
    pub fn powers_of_two(cap: u64) -> Result<KPlan, DensityError> {
        let mut ks = Vec::new();
        let mut k = 2u64;
        while k <= cap {
            ks.push(k);
            match k.checked_mul(2) {
                Some(next) => k = next,
                None => break,
            }
        }
        KPlan::explicit(ks)
    }

    pub fn checkpoints(&self) -> &[u64] {
        &self.0
    }

    pub fn cap(&self) -> u64 {
        *self.0.last().expect("plans are nonempty")
    }
}

/// Ratio series along K with convergence diagnostics. The limit these
/// ratios chase is a genuine limit; finite runs report the final ratio and
/// the oscillation over the last quartile of checkpoints instead of
/// extrapolating.
#[derive(Clone, Debug, Serialize)]
pub struct DensityEstimate {
    pub checkpoints: Vec<u64>,
    pub counts: Vec<u64>,
    pub ratios: Vec<f64>,
    pub final_value: f64,
    pub oscillation: f64,
}

fn oscillation(ratios: &[f64]) -> f64 {
    let q = ratios.len().div_ceil(4).max(1);
    let tail = &ratios[ratios.len() - q..];
    let max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

/// Exact member counts of `x` over `[0, k)` for every checkpoint `k`.
///
/// The scan is chunked between consecutive checkpoints and the chunks are
/// counted in parallel; prefix sums then give exact checkpoint counts, so
/// the result does not depend on the worker count.
pub fn count_members(
    x: &SetSpec,
    plan: &KPlan,
    store: &SeqStore,
) -> Result<Vec<u64>, DensityError> {
    x.validate(store)?;
    let checkpoints = plan.checkpoints();
    let mut spans = Vec::with_capacity(checkpoints.len());
    let mut prev = 0u64;
    for &k in checkpoints {
        spans.push((prev, k));
        prev = k;
    }
    let chunk_counts: Vec<u64> = spans
        .par_iter()
        .map(|&(lo, hi)| {
            let mut c = 0u64;
            for n in lo..hi {
                if x.contains(n, store)? {
                    c += 1;
                }
            }
            Ok(c)
        })
        .collect::<Result<_, DensityError>>()?;
    let mut acc = 0u64;
    Ok(chunk_counts
        .into_iter()
        .map(|c| {
            acc += c;
            acc
        })
        .collect())
}

/// K-density estimator: the ratio series `|X ∩ [0, k)| / k` along K.
pub fn k_density(
    x: &SetSpec,
    plan: &KPlan,
    store: &SeqStore,
) -> Result<DensityEstimate, DensityError> {
    let counts = count_members(x, plan, store)?;
    let checkpoints = plan.checkpoints().to_vec();
    let ratios: Vec<f64> =
        counts.iter().zip(&checkpoints).map(|(&c, &k)| c as f64 / k as f64).collect();
    Ok(DensityEstimate {
        final_value: *ratios.last().unwrap(),
        oscillation: oscillation(&ratios),
        checkpoints,
        counts,
        ratios,
    })
}

/// A nested chain `U_1 ⊇ U_2 ⊇ ... ⊇ U_m` of positive-density sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    levels: Vec<SetSpec>,
}

impl Chain {
    /// Built-in default: `U_t` = multiples of `2^t`, nested by construction.
    pub fn powers_of_two(depth: u32) -> Result<Chain, DensityError> {
        if depth == 0 {
            return Err(DensityError::EmptyChain);
        }
        let levels = (1..=depth).map(|t| SetSpec::multiples_of(1 << t)).collect();
        Ok(Chain { levels })
    }

    /// User-supplied chain. Nesting is verified exhaustively up to 10^5 and
    /// on a deterministic stride sample beyond that, up to `cap`.
    pub fn custom(levels: Vec<SetSpec>, cap: u64, store: &SeqStore) -> Result<Chain, DensityError> {
        if levels.is_empty() {
            return Err(DensityError::EmptyChain);
        }
        const EXHAUSTIVE: u64 = 100_000;
        for level in 1..levels.len() {
            let outer = &levels[level - 1];
            let inner = &levels[level];
            let check = |n: u64| -> Result<Option<u64>, DensityError> {
                Ok((inner.contains(n, store)? && !outer.contains(n, store)?).then_some(n))
            };
            for n in 0..=cap.min(EXHAUSTIVE) {
                if let Some(witness) = check(n)? {
                    return Err(DensityError::ChainNotNested { level, witness });
                }
            }
            if cap > EXHAUSTIVE {
                let stride = ((cap - EXHAUSTIVE) / 10_000).max(1) | 1;
                let mut n = EXHAUSTIVE + 1;
                while n <= cap {
                    if let Some(witness) = check(n)? {
                        return Err(DensityError::ChainNotNested { level, witness });
                    }
                    n += stride;
                }
            }
        }
        Ok(Chain { levels })
    }

    pub fn levels(&self) -> &[SetSpec] {
        &self.levels
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }
}

/// Ratio series of `|X ∩ U_t ∩ [0,k)| / |U_t ∩ [0,k)|` for one depth `t`.
#[derive(Clone, Debug, Serialize)]
pub struct DepthEstimate {
    pub depth: usize,
    pub checkpoints: Vec<u64>,
    pub joint_counts: Vec<u64>,
    pub level_counts: Vec<u64>,
    pub ratios: Vec<f64>,
    pub final_value: f64,
    pub oscillation: f64,
}

/// Chain-density report: one conditional ratio series per depth. The
/// deepest final ratio is the headline estimate; all depths are reported
/// because the stabilization depth is a judgment call.
#[derive(Clone, Debug, Serialize)]
pub struct ChainDensityReport {
    pub per_depth: Vec<DepthEstimate>,
}

impl ChainDensityReport {
    pub fn deepest(&self) -> &DepthEstimate {
        self.per_depth.last().expect("chains are nonempty")
    }

    pub fn estimate(&self) -> f64 {
        self.deepest().final_value
    }
}

/// Chain density of `X`: conditional densities against each chain level.
pub fn chain_density(
    x: &SetSpec,
    chain: &Chain,
    plan: &KPlan,
    store: &SeqStore,
) -> Result<ChainDensityReport, DensityError> {
    let mut per_depth = Vec::with_capacity(chain.depth());
    for (t, level) in chain.levels().iter().enumerate() {
        let depth = t + 1;
        let joint = SetSpec::intersect(x.clone(), level.clone());
        let joint_counts = count_members(&joint, plan, store)?;
        let level_counts = count_members(level, plan, store)?;
        if *level_counts.last().unwrap() == 0 {
            return Err(DensityError::ZeroLevelDensity { depth });
        }
        // Ratio once the level has members; 0/0 before that renders as 0.
        let ratios: Vec<f64> = joint_counts
            .iter()
            .zip(&level_counts)
            .map(|(&j, &l)| if l == 0 { 0.0 } else { j as f64 / l as f64 })
            .collect();
        per_depth.push(DepthEstimate {
            depth,
            checkpoints: plan.checkpoints().to_vec(),
            final_value: *ratios.last().unwrap(),
            oscillation: oscillation(&ratios),
            joint_counts,
            level_counts,
            ratios,
        });
    }
    Ok(ChainDensityReport { per_depth })
}

/// Event-measure report: the chain density of the event set, read as the
/// probability the measure construction assigns to the event.
#[derive(Clone, Debug, Serialize)]
pub struct MeasureReport {
    pub event: String,
    pub chain_depth: usize,
    pub report: ChainDensityReport,
    /// The deepest-level final ratio: the estimated event probability.
    pub probability: f64,
}

/// Estimates the measure of the event `{n : ψ(n)}` as its chain density.
pub fn measure_event(
    psi: &SetSpec,
    chain: &Chain,
    plan: &KPlan,
    store: &SeqStore,
) -> Result<MeasureReport, DensityError> {
    let report = chain_density(psi, chain, plan, store)?;
    Ok(MeasureReport {
        event: psi.to_string(),
        chain_depth: chain.depth(),
        probability: report.estimate(),
        report,
    })
}

/// Verdict for one fact check.
#[derive(Clone, Debug, Serialize)]
pub struct FactVerdict {
    pub fact: String,
    /// Exact counting identity (true) versus tolerance-based (false).
    pub exact: bool,
    /// False when the fact's premise was not met by the supplied sets.
    pub applicable: bool,
    pub pass: bool,
    pub tolerance: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct FactReport {
    pub verdicts: Vec<FactVerdict>,
    pub pass: bool,
}

/// Exact finite additivity of the K-density counts: for disjoint X, Y the
/// union count equals the sum of the counts at every checkpoint.
pub fn fact_additivity(
    x: &SetSpec,
    y: &SetSpec,
    plan: &KPlan,
    store: &SeqStore,
) -> Result<FactVerdict, DensityError> {
    let cx = count_members(x, plan, store)?;
    let cy = count_members(y, plan, store)?;
    let cu = count_members(&SetSpec::union(x.clone(), y.clone()), plan, store)?;
    let pass = cx.iter().zip(&cy).zip(&cu).all(|((&a, &b), &u)| a + b == u);
    Ok(FactVerdict {
        fact: "dens_K additivity".into(),
        exact: true,
        applicable: true,
        pass,
        tolerance: None,
        detail: format!(
            "count(X)+count(Y) = count(X∪Y) at all {} checkpoints: {}",
            plan.checkpoints().len(),
            pass
        ),
    })
}

/// If both X and Y have full density, so does their intersection. Vacuous
/// when the premise fails at the cap.
pub fn fact_full_intersection(
    x: &SetSpec,
    y: &SetSpec,
    plan: &KPlan,
    store: &SeqStore,
    tol: f64,
) -> Result<FactVerdict, DensityError> {
    let dx = k_density(x, plan, store)?.final_value;
    let dy = k_density(y, plan, store)?.final_value;
    if dx < 1.0 - tol || dy < 1.0 - tol {
        return Ok(FactVerdict {
            fact: "full-density intersection".into(),
            exact: false,
            applicable: false,
            pass: true,
            tolerance: Some(tol),
            detail: format!("premise unmet: dens X = {dx:.6}, dens Y = {dy:.6}"),
        });
    }
    let di = k_density(&SetSpec::intersect(x.clone(), y.clone()), plan, store)?.final_value;
    Ok(FactVerdict {
        fact: "full-density intersection".into(),
        exact: false,
        applicable: true,
        pass: di >= 1.0 - tol,
        tolerance: Some(tol),
        detail: format!("dens(X∩Y) = {di:.6}"),
    })
}

/// A pseudorandom set splits X evenly: `dens(X∩Z) / dens(X) = 1/2`.
pub fn fact_even_split(
    x: &SetSpec,
    z: &SetSpec,
    plan: &KPlan,
    store: &SeqStore,
    tol: f64,
) -> Result<FactVerdict, DensityError> {
    let cx = count_members(x, plan, store)?;
    let cxz = count_members(&SetSpec::intersect(x.clone(), z.clone()), plan, store)?;
    let x_cap = *cx.last().unwrap();
    if x_cap == 0 {
        return Ok(FactVerdict {
            fact: "even split by pseudorandom set".into(),
            exact: false,
            applicable: false,
            pass: true,
            tolerance: Some(tol),
            detail: "premise unmet: X is empty at the cap".into(),
        });
    }
    let ratio = *cxz.last().unwrap() as f64 / x_cap as f64;
    Ok(FactVerdict {
        fact: "even split by pseudorandom set".into(),
        exact: false,
        applicable: true,
        pass: (ratio - 0.5).abs() <= tol,
        tolerance: Some(tol),
        detail: format!("dens(X∩Z)/dens(X) = {ratio:.6}"),
    })
}

/// Exact additivity inside every chain level.
pub fn fact_chain_additivity(
    x: &SetSpec,
    y: &SetSpec,
    chain: &Chain,
    plan: &KPlan,
    store: &SeqStore,
) -> Result<FactVerdict, DensityError> {
    let mut pass = true;
    for level in chain.levels() {
        let lx = SetSpec::intersect(x.clone(), level.clone());
        let ly = SetSpec::intersect(y.clone(), level.clone());
        let lu = SetSpec::intersect(SetSpec::union(x.clone(), y.clone()), level.clone());
        let cx = count_members(&lx, plan, store)?;
        let cy = count_members(&ly, plan, store)?;
        let cu = count_members(&lu, plan, store)?;
        pass &= cx.iter().zip(&cy).zip(&cu).all(|((&a, &b), &u)| a + b == u);
    }
    Ok(FactVerdict {
        fact: "dens_u0 additivity".into(),
        exact: true,
        applicable: true,
        pass,
        tolerance: None,
        detail: format!("exact additivity inside all {} chain levels: {pass}", chain.depth()),
    })
}

/// A pseudorandom set has chain density one half at every depth.
pub fn fact_chain_half(
    z: &SetSpec,
    chain: &Chain,
    plan: &KPlan,
    store: &SeqStore,
    tol: f64,
) -> Result<FactVerdict, DensityError> {
    let report = chain_density(z, chain, plan, store)?;
    let worst =
        report.per_depth.iter().map(|d| (d.final_value - 0.5).abs()).fold(0.0f64, f64::max);
    let values: Vec<String> =
        report.per_depth.iter().map(|d| format!("{:.6}", d.final_value)).collect();
    Ok(FactVerdict {
        fact: "chain density of pseudorandom set is 1/2".into(),
        exact: false,
        applicable: true,
        pass: worst <= tol,
        tolerance: Some(tol),
        detail: format!("per-depth values [{}]", values.join(", ")),
    })
}

/// Runs the bundled fact checks. X and Y must be disjoint (verified by a
/// scan up to the cap); Z plays the pseudorandom set.
pub fn check_facts(
    x: &SetSpec,
    y: &SetSpec,
    z: &SetSpec,
    chain: &Chain,
    plan: &KPlan,
    store: &SeqStore,
    tol: f64,
) -> Result<FactReport, DensityError> {
    for spec in [x, y, z] {
        spec.validate(store)?;
    }
    for n in 0..plan.cap() {
        if x.contains(n, store)? && y.contains(n, store)? {
            return Err(DensityError::NotDisjoint { witness: n });
        }
    }
    let verdicts = vec![
        fact_additivity(x, y, plan, store)?,
        fact_full_intersection(x, y, plan, store, tol)?,
        fact_even_split(x, z, plan, store, tol)?,
        fact_chain_additivity(x, y, chain, plan, store)?,
        fact_chain_half(z, chain, plan, store, tol)?,
    ];
    let pass = verdicts.iter().all(|v| v.pass);
    Ok(FactReport { verdicts, pass })
}
