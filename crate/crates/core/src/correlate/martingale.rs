use serde::Serialize;

use super::{CorrelateError, Sequence};
use crate::testlang::{Dyadic, TestFn};

/// How the stake fraction `beta(n)` in `[-1, 1]` is chosen at step `n`.
/// Positive values bet on `+1`, negative on `-1`.
pub enum BettingRule {
    /// `beta(n) = rule(n)`: oblivious, a function of the index only.
    Oblivious(TestFn),
    /// Bet `stake` on the previous outcome repeating; no bet at n = 1.
    RepeatLast { stake: Dyadic },
}

pub struct MartingaleSpec {
    pub initial: Dyadic,
    pub rule: BettingRule,
}

impl MartingaleSpec {
    pub fn oblivious(rule: TestFn) -> MartingaleSpec {
        MartingaleSpec { initial: Dyadic::ONE, rule: BettingRule::Oblivious(rule) }
    }

    pub fn repeat_last(stake: Dyadic) -> MartingaleSpec {
        MartingaleSpec { initial: Dyadic::ONE, rule: BettingRule::RepeatLast { stake } }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MartingaleTrace {
    /// `capital[k]` is the capital after observing `s(k + 1)`.
    pub capital: Vec<f64>,
    /// Maximum over the initial capital and the whole trace; the
    /// finite-scale proxy for the limsup.
    pub running_max: f64,
    pub final_capital: f64,
    /// Step at which the capital hit exactly zero, if it did.
    pub halted_at: Option<u64>,
}

/// Plays the betting strategy against `s(1), ..., s(n_max)` with the fair
/// update `F(n+1) = F(n) * (1 + beta(n) * s(n))`.
///
/// The source must be ±1-valued on the range; a zero entry is an error.
pub fn run_martingale(
    spec: &MartingaleSpec,
    s: &dyn Sequence,
    n_max: u64,
) -> Result<MartingaleTrace, CorrelateError> {
    if spec.initial <= Dyadic::ZERO {
        return Err(CorrelateError::NonPositiveCapital);
    }
    if s.first() > 1 {
        return Err(CorrelateError::SourceStartsLate { first: s.first() });
    }
    if let Some(last) = s.last() {
        if n_max > last {
            return Err(CorrelateError::CheckpointBeyondData { checkpoint: n_max, last });
        }
    }

    let mut capital = spec.initial.to_f64();
    let mut running_max = capital;
    let mut trace = Vec::with_capacity(n_max as usize);
    let mut halted_at = None;
    let mut prev: Option<i8> = None;
    for n in 1..=n_max {
        let outcome = s.value(n);
        if outcome != 1 && outcome != -1 {
            return Err(CorrelateError::NonBinaryValue { n });
        }
        let beta = match &spec.rule {
            BettingRule::Oblivious(rule) => {
                let b = rule.eval(n);
                if !b.in_unit_interval() {
                    return Err(CorrelateError::StakeOutOfRange { n, value: b.to_string() });
                }
                b
            }
            BettingRule::RepeatLast { stake } => {
                if !stake.in_unit_interval() {
                    return Err(CorrelateError::StakeOutOfRange { n, value: stake.to_string() });
                }
                match prev {
                    Some(o) => stake.scale_int(o as i64),
                    None => Dyadic::ZERO,
                }
            }
        };
        capital *= 1.0 + beta.to_f64() * outcome as f64;
        running_max = running_max.max(capital);
        trace.push(capital);
        prev = Some(outcome);
        if capital == 0.0 {
            halted_at = Some(n);
            break;
        }
    }
    Ok(MartingaleTrace {
        final_capital: capital,
        running_max,
        capital: trace,
        halted_at,
    })
}

/// The fairness identity of the update law:
/// `F*(1 + beta) + F*(1 - beta) = 2F`, exactly in dyadic arithmetic.
pub fn fairness_holds(capital: Dyadic, stake: Dyadic) -> bool {
    let up = capital.mul(&Dyadic::ONE.add(&stake));
    let down = capital.mul(&Dyadic::ONE.sub(&stake));
    up.add(&down) == capital.scale_int(2)
}
