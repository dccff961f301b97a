use serde::{Deserialize, Serialize};

use super::{Dyadic, LangError};
use crate::transforms::GSpec;

/// Boolean layer of the test-function language. Atoms read single bits,
/// residues, comparisons and popcount thresholds of the argument; the
/// closure is not/and/or/xor. Evaluation is a single bounded tree walk, so
/// cost is polynomial in the bit length of `n` by construction.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoolExpr {
    /// `bit(n, i)`: bit `i` of `n`, with `i <= 63`.
    Bit(u32),
    /// `n % modulus == residue`.
    ModEq { modulus: u64, residue: u64 },
    /// `n < bound`.
    Less(u64),
    /// `n in [lo, hi)`.
    InRange { lo: u64, hi: u64 },
    /// `popcount(n) >= threshold`.
    PopCountGe(u32),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Xor(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    pub fn eval(&self, n: u64) -> bool {
        match self {
            BoolExpr::Bit(i) => (n >> i) & 1 == 1,
            BoolExpr::ModEq { modulus, residue } => n % modulus == *residue,
            BoolExpr::Less(bound) => n < *bound,
            BoolExpr::InRange { lo, hi } => n >= *lo && n < *hi,
            BoolExpr::PopCountGe(t) => n.count_ones() >= *t,
            BoolExpr::Not(b) => !b.eval(n),
            BoolExpr::And(a, b) => a.eval(n) && b.eval(n),
            BoolExpr::Or(a, b) => a.eval(n) || b.eval(n),
            BoolExpr::Xor(a, b) => a.eval(n) ^ b.eval(n),
        }
    }

    /// The canonical always-true atom: every n satisfies `n % 1 == 0`.
    pub fn truth() -> BoolExpr {
        BoolExpr::ModEq { modulus: 1, residue: 0 }
    }

    pub fn falsity() -> BoolExpr {
        BoolExpr::Not(Box::new(BoolExpr::truth()))
    }

    /// Recognizes the two canonical constants (only those; no deep solving).
    pub fn as_const(&self) -> Option<bool> {
        match self {
            BoolExpr::ModEq { modulus: 1, residue: 0 } => Some(true),
            BoolExpr::Not(inner) => inner.as_const().map(|b| !b),
            _ => None,
        }
    }

    pub fn not(self) -> BoolExpr {
        match self.as_const() {
            Some(b) => BoolExpr::constant(!b),
            None => BoolExpr::Not(Box::new(self)),
        }
    }

    pub fn and(self, other: BoolExpr) -> BoolExpr {
        match (self.as_const(), other.as_const()) {
            (Some(false), _) | (_, Some(false)) => BoolExpr::falsity(),
            (Some(true), _) => other,
            (_, Some(true)) => self,
            _ => BoolExpr::And(Box::new(self), Box::new(other)),
        }
    }

    pub fn or(self, other: BoolExpr) -> BoolExpr {
        match (self.as_const(), other.as_const()) {
            (Some(true), _) | (_, Some(true)) => BoolExpr::truth(),
            (Some(false), _) => other,
            (_, Some(false)) => self,
            _ => BoolExpr::Or(Box::new(self), Box::new(other)),
        }
    }

    pub fn xor(self, other: BoolExpr) -> BoolExpr {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) => BoolExpr::constant(a ^ b),
            (Some(true), _) => other.not(),
            (_, Some(true)) => self.not(),
            (Some(false), _) => other,
            (_, Some(false)) => self,
            _ => BoolExpr::Xor(Box::new(self), Box::new(other)),
        }
    }

    pub fn constant(value: bool) -> BoolExpr {
        if value {
            BoolExpr::truth()
        } else {
            BoolExpr::falsity()
        }
    }
}

/// Ternary layer: expressions with values in `{-1, 0, +1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TernExpr {
    /// Constant -1, 0 or +1.
    Lit(i8),
    /// `pm(b)`: +1 when `b` holds, else -1.
    Pm(BoolExpr),
    /// `ind(b)`: +1 when `b` holds, else 0.
    Ind(BoolExpr),
    /// `tern(n % m : v_0, ..., v_{m-1})`: value chosen by `n mod m`.
    Cases(Vec<i8>),
    /// Product of two or more non-product factors.
    Product(Vec<TernExpr>),
    /// `inner(g^-1(n))` when `n >= n0` and `n` is in the range of `g`,
    /// else 0. Carrier for lifted witnesses.
    Lift { g: Box<GSpec>, n0: u64, inner: Box<TernExpr> },
}

impl TernExpr {
    pub fn eval(&self, n: u64) -> i8 {
        match self {
            TernExpr::Lit(v) => *v,
            TernExpr::Pm(b) => {
                if b.eval(n) {
                    1
                } else {
                    -1
                }
            }
            TernExpr::Ind(b) => i8::from(b.eval(n)),
            TernExpr::Cases(values) => values[(n % values.len() as u64) as usize],
            TernExpr::Product(parts) => {
                let mut acc = 1i8;
                for p in parts {
                    acc *= p.eval(n);
                    if acc == 0 {
                        return 0;
                    }
                }
                acc
            }
            TernExpr::Lift { g, n0, inner } => {
                if n < *n0 {
                    return 0;
                }
                match g.invert(n) {
                    Some(x) => inner.eval(x),
                    None => 0,
                }
            }
        }
    }

    pub fn lit(v: i8) -> Result<TernExpr, LangError> {
        if !(-1..=1).contains(&v) {
            return Err(LangError::BadLiteral(v));
        }
        Ok(TernExpr::Lit(v))
    }

    pub fn cases(values: Vec<i8>) -> Result<TernExpr, LangError> {
        if values.is_empty() {
            return Err(LangError::EmptyCases);
        }
        if let Some(&v) = values.iter().find(|v| !(-1..=1).contains(*v)) {
            return Err(LangError::BadLiteral(v));
        }
        Ok(TernExpr::Cases(values))
    }

    /// Builds a flattened product, folding literal factors (including
    /// those inside nested products) into a single leading sign.
    pub fn product(factors: Vec<TernExpr>) -> TernExpr {
        fn absorb(factor: TernExpr, flat: &mut Vec<TernExpr>, sign: &mut i8) -> bool {
            match factor {
                TernExpr::Lit(0) => return true,
                TernExpr::Lit(v) => *sign *= v,
                TernExpr::Product(inner) => {
                    for part in inner {
                        if absorb(part, flat, sign) {
                            return true;
                        }
                    }
                }
                other => flat.push(other),
            }
            false
        }
        let mut flat: Vec<TernExpr> = Vec::new();
        let mut sign = 1i8;
        for factor in factors {
            if absorb(factor, &mut flat, &mut sign) {
                return TernExpr::Lit(0);
            }
        }
        if sign == -1 {
            flat.insert(0, TernExpr::Lit(-1));
        }
        match flat.len() {
            0 => TernExpr::Lit(sign),
            1 => flat.pop().unwrap(),
            _ => TernExpr::Product(flat),
        }
    }

    /// `pm(b)` with constant folding.
    pub fn pm_of(b: BoolExpr) -> TernExpr {
        match b.as_const() {
            Some(true) => TernExpr::Lit(1),
            Some(false) => TernExpr::Lit(-1),
            None => TernExpr::Pm(b),
        }
    }

    /// `ind(b)` with constant folding.
    pub fn ind_of(b: BoolExpr) -> TernExpr {
        match b.as_const() {
            Some(true) => TernExpr::Lit(1),
            Some(false) => TernExpr::Lit(0),
            None => TernExpr::Ind(b),
        }
    }

    pub fn contains_lift(&self) -> bool {
        match self {
            TernExpr::Lift { .. } => true,
            TernExpr::Product(parts) => parts.iter().any(|p| p.contains_lift()),
            _ => false,
        }
    }
}

/// A low-complexity test function: either ternary-valued, or a dyadic
/// combination `sum_i w_i * t_i` with dyadic weights and ternary parts.
///
/// Dyadic combinations are constructed with `sum_i |w_i| <= 1`, which keeps
/// every value inside `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestFn {
    Ternary(TernExpr),
    Dyadic(Vec<(Dyadic, TernExpr)>),
}

impl TestFn {
    /// Builds a dyadic combination, dropping zero weights and enforcing the
    /// unit bound on the total weight.
    pub fn dyadic(terms: Vec<(Dyadic, TernExpr)>) -> Result<TestFn, LangError> {
        let terms: Vec<(Dyadic, TernExpr)> =
            terms.into_iter().filter(|(w, _)| !w.is_zero()).collect();
        if terms.is_empty() {
            return Ok(TestFn::Ternary(TernExpr::Lit(0)));
        }
        let mut total = Dyadic::ZERO;
        for (w, _) in &terms {
            total = total.add(&w.abs());
        }
        if !total.in_unit_interval() {
            return Err(LangError::WeightsExceedUnit(total.to_string()));
        }
        Ok(TestFn::Dyadic(terms))
    }

    pub fn constant(v: i8) -> TestFn {
        TestFn::Ternary(TernExpr::Lit(v))
    }

    pub fn is_ternary(&self) -> bool {
        matches!(self, TestFn::Ternary(_))
    }

    pub fn as_ternary(&self) -> Option<&TernExpr> {
        match self {
            TestFn::Ternary(t) => Some(t),
            TestFn::Dyadic(_) => None,
        }
    }

    /// Exact value at `n`, a dyadic rational in `[-1, 1]`.
    pub fn eval(&self, n: u64) -> Dyadic {
        match self {
            TestFn::Ternary(t) => Dyadic::from_int(t.eval(n) as i64),
            TestFn::Dyadic(terms) => {
                let mut acc = Dyadic::ZERO;
                for (w, t) in terms {
                    acc = acc.add(&w.scale_int(t.eval(n) as i64));
                }
                acc
            }
        }
    }

    /// Ternary value at `n`, when this function is ternary-typed.
    pub fn eval_ternary(&self, n: u64) -> Option<i8> {
        self.as_ternary().map(|t| t.eval(n))
    }

    /// Upper bound on the denominator exponent of any value: 0 for ternary
    /// functions, the largest weight exponent for dyadic combinations.
    pub fn denom_exp_bound(&self) -> u32 {
        match self {
            TestFn::Ternary(_) => 0,
            TestFn::Dyadic(terms) => terms.iter().map(|(w, _)| w.exp()).max().unwrap_or(0),
        }
    }

    pub fn contains_lift(&self) -> bool {
        match self {
            TestFn::Ternary(t) => t.contains_lift(),
            TestFn::Dyadic(terms) => terms.iter().any(|(_, t)| t.contains_lift()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bool_atoms() {
        assert!(BoolExpr::Bit(0).eval(5));
        assert!(!BoolExpr::Bit(1).eval(5));
        assert!(BoolExpr::ModEq { modulus: 3, residue: 2 }.eval(8));
        assert!(BoolExpr::Less(10).eval(9));
        assert!(!BoolExpr::Less(10).eval(10));
        assert!(BoolExpr::InRange { lo: 4, hi: 8 }.eval(4));
        assert!(!BoolExpr::InRange { lo: 4, hi: 8 }.eval(8));
        assert!(BoolExpr::PopCountGe(2).eval(6));
        assert!(!BoolExpr::PopCountGe(3).eval(6));
    }

    #[test]
    fn constant_folding() {
        assert_eq!(BoolExpr::truth().as_const(), Some(true));
        assert_eq!(BoolExpr::falsity().as_const(), Some(false));
        assert_eq!(BoolExpr::truth().and(BoolExpr::Bit(0)), BoolExpr::Bit(0));
        assert_eq!(BoolExpr::falsity().or(BoolExpr::Bit(0)), BoolExpr::Bit(0));
        assert_eq!(BoolExpr::truth().xor(BoolExpr::truth()).as_const(), Some(false));
        assert_eq!(TernExpr::pm_of(BoolExpr::truth()), TernExpr::Lit(1));
        assert_eq!(TernExpr::ind_of(BoolExpr::falsity()), TernExpr::Lit(0));
    }

    #[test]
    fn products_fold() {
        let pm = TernExpr::Pm(BoolExpr::Bit(0));
        assert_eq!(
            TernExpr::product(vec![TernExpr::Lit(1), pm.clone()]),
            pm.clone()
        );
        assert_eq!(
            TernExpr::product(vec![TernExpr::Lit(0), pm.clone()]),
            TernExpr::Lit(0)
        );
        let neg = TernExpr::product(vec![TernExpr::Lit(-1), pm.clone()]);
        assert_eq!(neg.eval(1), -1);
        assert_eq!(neg.eval(2), 1);
    }

    #[test]
    fn cases_select_by_residue() {
        let t = TernExpr::cases(vec![1, -1, 0]).unwrap();
        assert_eq!(t.eval(3), 1);
        assert_eq!(t.eval(4), -1);
        assert_eq!(t.eval(5), 0);
        assert!(TernExpr::cases(vec![]).is_err());
        assert!(TernExpr::cases(vec![2]).is_err());
    }

    #[test]
    fn dyadic_bounds() {
        let half_pm = (Dyadic::HALF, TernExpr::Pm(BoolExpr::Bit(0)));
        let f = TestFn::dyadic(vec![half_pm.clone(), half_pm.clone()]).unwrap();
        assert!(f.eval(1).in_unit_interval());
        assert_eq!(f.eval(1), Dyadic::ONE);
        assert_eq!(f.eval(2), Dyadic::NEG_ONE);

        let too_big = TestFn::dyadic(vec![
            (Dyadic::ONE, TernExpr::Pm(BoolExpr::Bit(0))),
            (Dyadic::HALF, TernExpr::Pm(BoolExpr::Bit(1))),
        ]);
        assert!(too_big.is_err());

        let empty = TestFn::dyadic(vec![]).unwrap();
        assert_eq!(empty, TestFn::constant(0));
    }
}
