//! Structural decompositions of test functions.
//!
//! `split_pm` rewrites a ternary function as the average of two ±1-valued
//! functions. `dyadic_decompose` expands a dyadic combination into signed
//! binary digit functions with ternary values. `square_flip` negates a
//! function on the multiples of any square `k^2` with `2 <= k <= n0`.

use super::ast::{BoolExpr, TernExpr, TestFn};
use super::{Dyadic, LangError};

/// Class enumeration is exponential in the number of distinct non-constant
/// components, so cap it.
pub const MAX_COMPONENTS: usize = 8;

// Boolean expressions deciding `t(n) = +1`, `t(n) = -1`, `t(n) = 0`
// structurally, entirely inside the grammar.

fn is_one(t: &TernExpr) -> BoolExpr {
    match t {
        TernExpr::Lit(v) => BoolExpr::constant(*v == 1),
        TernExpr::Pm(b) => b.clone(),
        TernExpr::Ind(b) => b.clone(),
        TernExpr::Cases(values) => residue_union(values, 1),
        TernExpr::Product(parts) => {
            let zero = parts.iter().map(is_zero).fold(BoolExpr::falsity(), BoolExpr::or);
            let neg_parity = parts.iter().map(is_neg_one).fold(BoolExpr::falsity(), BoolExpr::xor);
            zero.not().and(neg_parity.not())
        }
        TernExpr::Lift { .. } => unreachable!("lift is rejected before digit analysis"),
    }
}

fn is_neg_one(t: &TernExpr) -> BoolExpr {
    match t {
        TernExpr::Lit(v) => BoolExpr::constant(*v == -1),
        TernExpr::Pm(b) => b.clone().not(),
        TernExpr::Ind(_) => BoolExpr::falsity(),
        TernExpr::Cases(values) => residue_union(values, -1),
        TernExpr::Product(parts) => {
            let zero = parts.iter().map(is_zero).fold(BoolExpr::falsity(), BoolExpr::or);
            let neg_parity = parts.iter().map(is_neg_one).fold(BoolExpr::falsity(), BoolExpr::xor);
            zero.not().and(neg_parity)
        }
        TernExpr::Lift { .. } => unreachable!("lift is rejected before digit analysis"),
    }
}

fn is_zero(t: &TernExpr) -> BoolExpr {
    match t {
        TernExpr::Lit(v) => BoolExpr::constant(*v == 0),
        TernExpr::Pm(_) => BoolExpr::falsity(),
        TernExpr::Ind(b) => b.clone().not(),
        TernExpr::Cases(values) => residue_union(values, 0),
        TernExpr::Product(parts) => {
            parts.iter().map(is_zero).fold(BoolExpr::falsity(), BoolExpr::or)
        }
        TernExpr::Lift { .. } => unreachable!("lift is rejected before digit analysis"),
    }
}

fn residue_union(values: &[i8], value: i8) -> BoolExpr {
    let modulus = values.len() as u64;
    values
        .iter()
        .enumerate()
        .filter(|&(_, v)| *v == value)
        .map(|(r, _)| BoolExpr::ModEq { modulus, residue: r as u64 })
        .fold(BoolExpr::falsity(), BoolExpr::or)
}

/// Splits a ternary `f` into ±1-valued `(f_plus, f_minus)` with
/// `f = (f_plus + f_minus) / 2` pointwise: `f_plus` is +1 exactly where
/// `f` is +1, `f_minus` is -1 exactly where `f` is -1.
pub fn split_pm(f: &TestFn) -> Result<(TestFn, TestFn), LangError> {
    let t = f.as_ternary().ok_or(LangError::TernaryRequired)?;
    if t.contains_lift() {
        return Err(LangError::LiftUnsupported);
    }
    let plus = TernExpr::pm_of(is_one(t));
    let minus = TernExpr::pm_of(is_neg_one(t).not());
    Ok((TestFn::Ternary(plus), TestFn::Ternary(minus)))
}

/// A truncated signed-digit expansion `F(n) ~ sum_j 2^-j * f_j(n)` with
/// ternary digit functions and strictly increasing exponents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicDecomposition {
    pub terms: Vec<(u32, TestFn)>,
}

impl DyadicDecomposition {
    pub fn reconstruct(&self, n: u64) -> Dyadic {
        let mut acc = Dyadic::ZERO;
        for (j, f) in &self.terms {
            let digit = f.eval_ternary(n).expect("decomposition digits are ternary");
            acc = acc.add(&Dyadic::power_of_two(*j).scale_int(digit as i64));
        }
        acc
    }

    pub fn max_exponent(&self) -> Option<u32> {
        self.terms.last().map(|(j, _)| *j)
    }
}

/// Expands `f` into digit functions for exponents `1..=j_max`, with
/// pointwise error at most `2^-j_max` (exact whenever every attainable
/// value of `f` terminates within `j_max` binary digits).
pub fn dyadic_decompose(f: &TestFn, j_max: u32) -> Result<DyadicDecomposition, LangError> {
    if j_max == 0 {
        return Err(LangError::ZeroDepth);
    }
    if f.contains_lift() {
        return Err(LangError::LiftUnsupported);
    }
    let weighted: Vec<(Dyadic, &TernExpr)> = match f {
        TestFn::Ternary(t) => vec![(Dyadic::ONE, t)],
        TestFn::Dyadic(terms) => terms.iter().map(|(w, t)| (*w, t)).collect(),
    };

    // Fold literal components into a constant base; deduplicate the rest,
    // merging weights of repeated components.
    let mut base = Dyadic::ZERO;
    let mut components: Vec<&TernExpr> = Vec::new();
    let mut weights: Vec<Dyadic> = Vec::new();
    for (w, t) in weighted {
        if let TernExpr::Lit(v) = t {
            base = base.add(&w.scale_int(*v as i64));
        } else if let Some(i) = components.iter().position(|&c| c == t) {
            weights[i] = weights[i].add(&w);
        } else {
            components.push(t);
            weights.push(w);
        }
    }
    if components.len() > MAX_COMPONENTS {
        return Err(LangError::TooManyComponents(components.len()));
    }

    // One class per attainable component-value vector; each n falls in
    // exactly one class, where f takes the constant value of that class.
    let k = components.len();
    let class_count = 3usize.pow(k as u32);
    let mut plus: Vec<Option<BoolExpr>> = vec![None; j_max as usize];
    let mut minus: Vec<Option<BoolExpr>> = vec![None; j_max as usize];
    for class in 0..class_count {
        let mut indicator = BoolExpr::truth();
        let mut value = base;
        let mut rest = class;
        for i in 0..k {
            let sigma = (rest % 3) as i64 - 1; // -1, 0, +1
            rest /= 3;
            let eq = match sigma {
                1 => is_one(components[i]),
                0 => is_zero(components[i]),
                _ => is_neg_one(components[i]),
            };
            indicator = indicator.and(eq);
            value = value.add(&weights[i].scale_int(sigma));
        }
        if indicator.as_const() == Some(false) {
            continue; // structurally unreachable class
        }
        for (j, digit) in signed_digits(value, j_max).into_iter().enumerate() {
            let slot = match digit {
                1 => &mut plus[j],
                -1 => &mut minus[j],
                _ => continue,
            };
            *slot = Some(match slot.take() {
                Some(existing) => existing.or(indicator.clone()),
                None => indicator.clone(),
            });
        }
    }

    let mut terms = Vec::new();
    for j in 1..=j_max {
        let digit = match (plus[(j - 1) as usize].take(), minus[(j - 1) as usize].take()) {
            (None, None) => continue,
            (Some(p), None) => TernExpr::ind_of(p),
            (None, Some(m)) => TernExpr::product(vec![TernExpr::Lit(-1), TernExpr::ind_of(m)]),
            (Some(p), Some(m)) => {
                let support = p.clone().or(m);
                TernExpr::product(vec![TernExpr::pm_of(p), TernExpr::ind_of(support)])
            }
        };
        terms.push((j, TestFn::Ternary(digit)));
    }
    Ok(DyadicDecomposition { terms })
}

/// Signed binary digits of `x` in `[-1, 1]` for exponents `1..=j_max`:
/// the sign of `x` times the greedy binary expansion of `|x|`. The
/// remainder after `j` digits is at most `2^-j`.
fn signed_digits(x: Dyadic, j_max: u32) -> Vec<i8> {
    let sign = x.signum();
    let mut rest = x.abs();
    let mut digits = vec![0i8; j_max as usize];
    for (j, slot) in digits.iter_mut().enumerate() {
        if rest.is_zero() {
            break;
        }
        let weight = Dyadic::power_of_two(j as u32 + 1);
        if rest >= weight {
            *slot = sign;
            rest = rest.sub(&weight);
        }
    }
    digits
}

/// The deterministic flip: negate `f` on every `n` divisible by `k^2` for
/// some `2 <= k <= n0`, keep it elsewhere.
pub fn square_flip(f: &TestFn, n0: u64) -> Result<TestFn, LangError> {
    let t = f.as_ternary().ok_or(LangError::TernaryRequired)?;
    if n0 < 2 {
        return Err(LangError::FlipBoundTooSmall);
    }
    let mut divisible = BoolExpr::falsity();
    for k in 2..=n0 {
        let square = k.checked_mul(k).ok_or(LangError::FlipBoundTooBig(n0))?;
        divisible = divisible.or(BoolExpr::ModEq { modulus: square, residue: 0 });
    }
    let flip = TernExpr::pm_of(divisible.not());
    Ok(TestFn::Ternary(TernExpr::product(vec![t.clone(), flip])))
}
