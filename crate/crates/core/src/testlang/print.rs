//! Canonical pretty-printing. Printing an AST and reparsing it yields the
//! same AST; the printer therefore mirrors the parser's precedence rules
//! and always writes dyadic weights with an explicit denominator.

use std::fmt;

use super::ast::{BoolExpr, TernExpr, TestFn};
use crate::transforms::GSpec;

// Binding strength of a boolean node; parenthesize a child that binds
// looser than its context requires.
fn prec(b: &BoolExpr) -> u8 {
    match b {
        BoolExpr::Or(..) => 1,
        BoolExpr::Xor(..) => 2,
        BoolExpr::And(..) => 3,
        BoolExpr::Not(..) => 4,
        _ => 5,
    }
}

fn fmt_bool(b: &BoolExpr, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let own = prec(b);
    if own < min_prec {
        write!(f, "(")?;
        fmt_bool(b, 0, f)?;
        return write!(f, ")");
    }
    match b {
        BoolExpr::Bit(i) => write!(f, "bit(n, {i})"),
        BoolExpr::ModEq { modulus, residue } => write!(f, "n % {modulus} == {residue}"),
        BoolExpr::Less(bound) => write!(f, "n < {bound}"),
        BoolExpr::InRange { lo, hi } => write!(f, "n in [{lo}, {hi})"),
        BoolExpr::PopCountGe(t) => write!(f, "popcount(n) >= {t}"),
        BoolExpr::Not(inner) => {
            write!(f, "not ")?;
            fmt_bool(inner, own, f)
        }
        BoolExpr::And(a, b2) => {
            fmt_bool(a, own, f)?;
            write!(f, " and ")?;
            fmt_bool(b2, own + 1, f)
        }
        BoolExpr::Or(a, b2) => {
            fmt_bool(a, own, f)?;
            write!(f, " or ")?;
            fmt_bool(b2, own + 1, f)
        }
        BoolExpr::Xor(a, b2) => {
            fmt_bool(a, own, f)?;
            write!(f, " xor ")?;
            fmt_bool(b2, own + 1, f)
        }
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_bool(self, 0, f)
    }
}

impl fmt::Display for GSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GSpec::Affine { a, b, x_min } => write!(f, "affine({a}, {b}, {x_min})"),
            GSpec::Poly { coeffs, x_min } => {
                write!(f, "poly(")?;
                for (i, c) in coeffs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, "; {x_min})")
            }
        }
    }
}

impl fmt::Display for TernExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TernExpr::Lit(v) => write!(f, "{v}"),
            TernExpr::Pm(b) => write!(f, "pm({b})"),
            TernExpr::Ind(b) => write!(f, "ind({b})"),
            TernExpr::Cases(values) => {
                write!(f, "tern(n % {} : ", values.len())?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
            TernExpr::Product(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " * ")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            TernExpr::Lift { g, n0, inner } => write!(f, "lift({g}; {n0}; {inner})"),
        }
    }
}

impl fmt::Display for TestFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFn::Ternary(t) => write!(f, "{t}"),
            TestFn::Dyadic(terms) => {
                for (i, (w, t)) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    // Weights keep an explicit denominator so a leading
                    // integer is never read back as a ternary literal.
                    write!(f, "{}/{} * {t}", w.num(), 1u64 << w.exp())?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse;

    fn roundtrip(text: &str) {
        let ast = parse(text).unwrap();
        let printed = ast.to_string();
        let reparsed = parse(&printed).unwrap_or_else(|e| panic!("reparse of `{printed}`: {e}"));
        assert_eq!(ast, reparsed, "printed form: `{printed}`");
        // Printing is canonical, so a second trip is a fixed point.
        assert_eq!(printed, reparsed.to_string());
    }

    #[test]
    fn simple_roundtrips() {
        roundtrip("pm(n % 2 == 0)");
        roundtrip("1");
        roundtrip("-1 * pm(bit(n, 0))");
        roundtrip("tern(n % 3 : 1, -1, 0)");
        roundtrip("ind(popcount(n) >= 3)");
        roundtrip("1/2 * pm(bit(n,0)) + 1/4 * pm(bit(n,1))");
        roundtrip("pm(bit(n,0) and not bit(n,1) or bit(n,2) xor n < 5)");
        roundtrip("lift(affine(2, 1, 0); 1; pm(n in [4, 9)))");
        roundtrip("lift(poly(1, 0, 2; 1); 3; tern(n % 2 : 1, -1))");
        roundtrip("-1/2 * pm(n % 7 == 3) + 1/4 * 1");
    }

    #[test]
    fn parens_preserved_where_needed() {
        let f = parse("pm(bit(n,0) and (bit(n,1) or bit(n,2)))").unwrap();
        let printed = f.to_string();
        assert_eq!(parse(&printed).unwrap(), f);
        assert!(printed.contains("(bit(n, 1) or bit(n, 2))"));
    }
}
