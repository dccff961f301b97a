//! Property tests: grammar round-trips, decomposition identities, block
//! packing and segmentation invariants.

use proptest::prelude::*;

use prlab_core::seqkernel::{self, SeqBlock, SeqKind};
use prlab_core::testlang::{
    dyadic_decompose, parse, split_pm, BoolExpr, Dyadic, TernExpr, TestFn,
};
use prlab_core::transforms::GSpec;

fn bool_strategy() -> impl Strategy<Value = BoolExpr> {
    let leaf = prop_oneof![
        (0u32..8).prop_map(BoolExpr::Bit),
        (1u64..40)
            .prop_flat_map(|m| (Just(m), 0..m))
            .prop_map(|(modulus, residue)| BoolExpr::ModEq { modulus, residue }),
        (0u64..2_000).prop_map(BoolExpr::Less),
        (0u64..500)
            .prop_flat_map(|lo| (Just(lo), lo..800))
            .prop_map(|(lo, hi)| BoolExpr::InRange { lo, hi }),
        (0u32..16).prop_map(BoolExpr::PopCountGe),
    ];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|b| BoolExpr::Not(Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| BoolExpr::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| BoolExpr::Or(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| BoolExpr::Xor(Box::new(a), Box::new(b))),
        ]
    })
}

fn tern_leaf() -> impl Strategy<Value = TernExpr> {
    prop_oneof![
        (-1i8..=1).prop_map(TernExpr::Lit),
        bool_strategy().prop_map(TernExpr::Pm),
        bool_strategy().prop_map(TernExpr::Ind),
        proptest::collection::vec(-1i8..=1, 1..6).prop_map(TernExpr::Cases),
    ]
}

fn tern_strategy() -> impl Strategy<Value = TernExpr> {
    tern_leaf().prop_recursive(2, 12, 3, |inner| {
        proptest::collection::vec(inner, 2..4).prop_map(TernExpr::product)
    })
}

fn lift_strategy() -> impl Strategy<Value = TernExpr> {
    (1u64..4, 0i64..6, 0u64..8, tern_leaf()).prop_map(|(a, b, n0, inner)| TernExpr::Lift {
        g: Box::new(GSpec::affine(a, b, 1).expect("a >= 1 and g(1) >= 1")),
        n0,
        inner: Box::new(inner),
    })
}

fn testfn_strategy() -> impl Strategy<Value = TestFn> {
    let dyadic_term = (prop_oneof![Just(-3i64), Just(-1), Just(1), Just(3)], 4u32..7, tern_strategy())
        .prop_map(|(num, exp, t)| (Dyadic::ratio(num, 1 << exp).unwrap(), t));
    prop_oneof![
        tern_strategy().prop_map(TestFn::Ternary),
        lift_strategy().prop_map(TestFn::Ternary),
        proptest::collection::vec(dyadic_term, 1..4)
            .prop_map(|terms| TestFn::dyadic(terms).expect("weights bounded by 3/4")),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn printed_ast_reparses_identically(f in testfn_strategy()) {
        let printed = f.to_string();
        let reparsed = parse(&printed)
            .unwrap_or_else(|e| panic!("reparse of `{printed}` failed: {e}"));
        prop_assert_eq!(&reparsed, &f, "printed `{}`", printed);
        // Canonical printing is a fixed point.
        prop_assert_eq!(reparsed.to_string(), printed);
    }

    #[test]
    fn split_pm_reconstructs(t in tern_strategy(), ns in proptest::collection::vec(1u64..5_000, 16)) {
        let f = TestFn::Ternary(t);
        let (plus, minus) = split_pm(&f).unwrap();
        for n in ns {
            let p = plus.eval_ternary(n).unwrap();
            let m = minus.eval_ternary(n).unwrap();
            prop_assert!(p.abs() == 1 && m.abs() == 1);
            prop_assert_eq!(Dyadic::HALF.scale_int((p + m) as i64), f.eval(n));
        }
    }

    #[test]
    fn decomposition_error_is_bounded(
        f in testfn_strategy(),
        j_max in 1u32..7,
        ns in proptest::collection::vec(1u64..5_000, 16),
    ) {
        prop_assume!(!f.contains_lift());
        let d = dyadic_decompose(&f, j_max).unwrap();
        let bound = Dyadic::power_of_two(j_max);
        for n in ns {
            let err = f.eval(n).sub(&d.reconstruct(n)).abs();
            prop_assert!(err <= bound, "err {} at n {} (J = {})", err, n, j_max);
        }
        prop_assert!(d.terms.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn packed_block_bytes_roundtrip(
        lo in 0u64..10_000,
        values in proptest::collection::vec(-1i8..=1, 1..200),
    ) {
        let block = SeqBlock::from_values(lo, SeqKind::Custom, &values).unwrap();
        let bytes = seqkernel::block_to_bytes(&block);
        let back = seqkernel::block_from_bytes(&bytes).unwrap();
        prop_assert_eq!(back, block);
    }

    #[test]
    fn sieve_segments_concatenate(
        lo in 1u64..20_000,
        len in 2u64..400,
        cut in 1u64..399,
    ) {
        let hi = lo + len;
        let cut = lo + 1 + (cut % (len - 1));
        let full = seqkernel::sieve_range(lo, hi, SeqKind::Mobius).unwrap();
        let left = seqkernel::sieve_range(lo, cut, SeqKind::Mobius).unwrap();
        let right = seqkernel::sieve_range(cut, hi, SeqKind::Mobius).unwrap();
        prop_assert_eq!(SeqBlock::concat(&[left, right]).unwrap(), full);
    }

    #[test]
    fn eval_stays_in_unit_interval(f in testfn_strategy(), n in 0u64..100_000) {
        let v = f.eval(n);
        prop_assert!(v.in_unit_interval(), "f(n) = {} at {}", v, n);
    }
}
