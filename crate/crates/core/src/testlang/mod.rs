//! A closed language of low-complexity test functions over the naturals.
//!
//! Ternary expressions take values in `{-1, 0, +1}`; dyadic combinations
//! weight ternary parts by dyadic rationals and stay inside `[-1, 1]`.
//! The grammar has no loops or recursion, so evaluation cost is bounded by
//! the expression size times the bit length of the argument.

mod ast;
mod decompose;
mod dyadic;
mod parser;
mod print;

pub use ast::{BoolExpr, TernExpr, TestFn};
pub use decompose::{dyadic_decompose, split_pm, square_flip, DyadicDecomposition, MAX_COMPONENTS};
pub use dyadic::Dyadic;
pub use parser::{parse, ParseError};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LangError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("a ternary-typed test function is required here")]
    TernaryRequired,
    #[error("lift(...) subexpressions are not supported by this construction")]
    LiftUnsupported,
    #[error("ternary literal {0} outside -1, 0, 1")]
    BadLiteral(i8),
    #[error("tern(...) needs at least one case value")]
    EmptyCases,
    #[error("dyadic weights sum to {0} in absolute value, exceeding 1")]
    WeightsExceedUnit(String),
    #[error("decomposition depth J must be at least 1")]
    ZeroDepth,
    #[error("square flip bound n0 must be at least 2")]
    FlipBoundTooSmall,
    #[error("square flip bound {0} is too large to square")]
    FlipBoundTooBig(u64),
    #[error("dyadic combination has {0} distinct components; class enumeration caps at {MAX_COMPONENTS}")]
    TooManyComponents(usize),
}

#[cfg(test)]
mod eval_tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let f = parse("pm(n % 2 == 0)").unwrap();
        assert_eq!(f.eval(4), Dyadic::ONE);
        assert_eq!(f.eval(7), Dyadic::NEG_ONE);

        let f = parse("pm(bit(n, 0))").unwrap();
        assert_eq!(f.eval(5), Dyadic::ONE); // 5 = 0b101

        let f = parse("1/2 * pm(bit(n,0)) + 1/4 * pm(bit(n,1))").unwrap();
        assert_eq!(f.eval(3), Dyadic::ratio(3, 4).unwrap());
        assert_eq!(f.eval(0b10), Dyadic::ratio(-1, 4).unwrap());
        assert!(f.eval(123).in_unit_interval());
    }

    #[test]
    fn denom_exp_bound_covers_values() {
        let f = parse("1/2 * pm(bit(n,0)) + 3/8 * tern(n % 3 : 1, 0, -1)").unwrap();
        let bound = f.denom_exp_bound();
        assert_eq!(bound, 3);
        for n in 1..200 {
            assert!(f.eval(n).exp() <= bound);
        }
    }
}
