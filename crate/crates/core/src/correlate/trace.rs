use serde::Serialize;

use super::{CheckpointPlan, CorrelateError, RawSum, Sequence};
use crate::testlang::{Dyadic, TestFn};

/// One recorded checkpoint of a correlation run.
#[derive(Clone, Debug, Serialize)]
pub struct TracePoint {
    pub n: u64,
    /// Exact partial sum `S(n) = sum_{i=1..n} f(i) s(i)`.
    pub raw: RawSum,
    /// `S(n) / n`.
    pub norm_n: f64,
    /// `S(n) / n^(1/2 + eps)`.
    pub norm_rh: f64,
    /// `S(n) / sqrt(2 n ln ln n)`; absent below n = 3.
    pub norm_lil: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelationTrace {
    pub eps: f64,
    pub points: Vec<TracePoint>,
}

impl CorrelationTrace {
    /// Largest `|norm_n|` over checkpoints strictly beyond `burn_in`,
    /// with the checkpoint where it occurs.
    pub fn max_abs_norm_beyond(&self, burn_in: u64) -> Option<(f64, u64)> {
        self.points
            .iter()
            .filter(|p| p.n > burn_in)
            .map(|p| (p.norm_n.abs(), p.n))
            .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
    }

    /// CSV rendering: `n,raw,norm_n,norm_rh,norm_lil` with an empty last
    /// field where the LIL normalization is undefined.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,raw,norm_n,norm_rh,norm_lil\n");
        for p in &self.points {
            let lil = p.norm_lil.map(|v| format!("{v}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.n,
                p.raw.to_rational_string(),
                p.norm_n,
                p.norm_rh,
                lil
            ));
        }
        out
    }
}

fn lil_denominator(n: u64) -> Option<f64> {
    if n < 3 {
        return None;
    }
    let lnln = (n as f64).ln().ln();
    if lnln <= 0.0 {
        return None;
    }
    Some((2.0 * n as f64 * lnln).sqrt())
}

/// Streams `s` once, accumulating the exact partial sum of `f(i) s(i)` and
/// recording the three normalizations at each checkpoint.
pub fn correlate(
    s: &dyn Sequence,
    f: &TestFn,
    plan: &CheckpointPlan,
    eps: f64,
) -> Result<CorrelationTrace, CorrelateError> {
    if !(eps > 0.0) {
        return Err(CorrelateError::BadEpsilon(eps));
    }
    plan.validate_against(s)?;

    let mut acc = RawSum::zero(f.denom_exp_bound());
    let mut points = Vec::with_capacity(plan.checkpoints().len());
    let mut next = 0usize;
    let checkpoints = plan.checkpoints();
    for n in 1..=plan.max() {
        let sv = s.value(n) as i64;
        if sv != 0 {
            acc.add_term(f.eval(n).scale_int(sv));
        }
        if checkpoints[next] == n {
            let raw = acc;
            let nf = n as f64;
            points.push(TracePoint {
                n,
                raw,
                norm_n: raw.to_f64() / nf,
                norm_rh: raw.to_f64() / nf.powf(0.5 + eps),
                norm_lil: lil_denominator(n).map(|d| raw.to_f64() / d),
            });
            next += 1;
            if next == checkpoints.len() {
                break;
            }
        }
    }
    Ok(CorrelationTrace { eps, points })
}

/// One checkpoint of the p-biased statistic.
#[derive(Clone, Debug, Serialize)]
pub struct BiasedPoint {
    pub n: u64,
    /// Exact `sum_{i<=n} f(i) (s(i) - 1) / 2`.
    pub base: RawSum,
    /// Exact `sum_{i<=n} f(i)`.
    pub fsum: RawSum,
    /// `(base + p * fsum) / n`.
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BiasedTrace {
    pub p: f64,
    pub points: Vec<BiasedPoint>,
}

/// The p-biased correlation statistic
/// `(1/n) sum_{i<=n} f(i) ((s(i) - 1)/2 + p)`.
///
/// The two exact accumulators keep the dyadic part exact; `p` enters only
/// in the final floating combination per checkpoint.
pub fn biased_statistic(
    s: &dyn Sequence,
    f: &TestFn,
    p: f64,
    plan: &CheckpointPlan,
) -> Result<BiasedTrace, CorrelateError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(CorrelateError::BadBias(p));
    }
    plan.validate_against(s)?;

    let exp = f.denom_exp_bound();
    let mut base = RawSum::zero(exp + 1);
    let mut fsum = RawSum::zero(exp);
    let mut points = Vec::with_capacity(plan.checkpoints().len());
    let mut next = 0usize;
    let checkpoints = plan.checkpoints();
    let half = Dyadic::HALF;
    for n in 1..=plan.max() {
        let fv = f.eval(n);
        let sv = s.value(n) as i64;
        // f(i) * (s(i) - 1) / 2
        base.add_term(fv.mul(&half).scale_int(sv - 1));
        fsum.add_term(fv);
        if checkpoints[next] == n {
            let value = (base.to_f64() + p * fsum.to_f64()) / n as f64;
            points.push(BiasedPoint { n, base, fsum, value });
            next += 1;
            if next == checkpoints.len() {
                break;
            }
        }
    }
    Ok(BiasedTrace { p, points })
}

#[cfg(test)]
mod tests {
    use super::super::{ConstSeq, PeriodicSeq, TestFnSeq};
    use super::*;
    use crate::seqkernel::{sieve_range, value_at, SeqKind};
    use crate::testlang::parse;

    #[test]
    fn liouville_prefix_sum_at_ten() {
        // Oracle: sum of λ(1..10) computed by trial division is 0.
        let oracle: i64 = (1..=10u64)
            .map(|n| value_at(n, SeqKind::Liouville).unwrap() as i64)
            .sum();
        assert_eq!(oracle, 0);

        let lam = sieve_range(1, 11, SeqKind::Liouville).unwrap();
        let plan = CheckpointPlan::explicit(vec![10]).unwrap();
        let trace = correlate(&lam, &TestFn::constant(1), &plan, 0.05).unwrap();
        assert_eq!(trace.points[0].raw.to_rational_string(), "0");
        assert_eq!(trace.points[0].norm_n, 0.0);
    }

    #[test]
    fn perfect_correlation() {
        let plan = CheckpointPlan::explicit(vec![100]).unwrap();
        let trace = correlate(&ConstSeq(1), &TestFn::constant(1), &plan, 0.05).unwrap();
        assert_eq!(trace.points[0].raw.to_rational_string(), "100");
        assert_eq!(trace.points[0].norm_n, 1.0);
    }

    #[test]
    fn matched_parity_test() {
        // s(i) = +1 on odd i; f = pm(n % 2 == 1) matches it exactly.
        let s = TestFnSeq::new(parse("pm(n % 2 == 1)").unwrap()).unwrap();
        let f = parse("pm(n % 2 == 1)").unwrap();
        let plan = CheckpointPlan::explicit(vec![50]).unwrap();
        let trace = correlate(&s, &f, &plan, 0.05).unwrap();
        assert_eq!(trace.points[0].raw.to_rational_string(), "50");
        assert_eq!(trace.points[0].norm_n, 1.0);
    }

    #[test]
    fn exactness_matches_naive_reference() {
        let lam = sieve_range(1, 5_001, SeqKind::Liouville).unwrap();
        let f = parse("1/2 * pm(bit(n,0)) + 3/8 * tern(n % 3 : 1, 0, -1)").unwrap();
        let plan = CheckpointPlan::powers_of_two(5_000).unwrap();
        let trace = correlate(&lam, &f, &plan, 0.05).unwrap();
        for point in &trace.points {
            let mut naive = Dyadic::ZERO;
            for n in 1..=point.n {
                naive = naive.add(&f.eval(n).scale_int(lam.get(n) as i64));
            }
            assert_eq!(point.raw.to_rational_string(), naive.to_string(), "n = {}", point.n);
        }
    }

    #[test]
    fn streaming_equals_chunked() {
        // Partial sums combined from arbitrary chunks equal the streamed sum.
        let lam = sieve_range(1, 2_001, SeqKind::Liouville).unwrap();
        let f = parse("pm(bit(n,0) xor bit(n,1))").unwrap();
        let plan = CheckpointPlan::explicit(vec![2_000]).unwrap();
        let streamed = correlate(&lam, &f, &plan, 0.05).unwrap();

        for chunk in [1u64, 3, 17, 256, 1999] {
            let mut acc = RawSum::zero(f.denom_exp_bound());
            let mut start = 1u64;
            while start <= 2_000 {
                let end = (start + chunk - 1).min(2_000);
                let mut partial = RawSum::zero(f.denom_exp_bound());
                for n in start..=end {
                    partial.add_term(f.eval(n).scale_int(lam.get(n) as i64));
                }
                acc = RawSum::combine(acc, partial);
                start = end + 1;
            }
            assert_eq!(acc, streamed.points[0].raw, "chunk {chunk}");
        }
    }

    #[test]
    fn norm_n_bounded_for_pm_data() {
        let lam = sieve_range(1, 4_097, SeqKind::Liouville).unwrap();
        let f = parse("pm(n % 3 == 1)").unwrap();
        let plan = CheckpointPlan::powers_of_two(4_096).unwrap();
        let trace = correlate(&lam, &f, &plan, 0.05).unwrap();
        for p in &trace.points {
            assert!(p.norm_n.abs() <= 1.0);
        }
    }

    #[test]
    fn norm_lil_defined_from_three() {
        let plan = CheckpointPlan::explicit(vec![1, 2, 3, 4]).unwrap();
        let trace = correlate(&ConstSeq(1), &TestFn::constant(1), &plan, 0.1).unwrap();
        assert!(trace.points[0].norm_lil.is_none());
        assert!(trace.points[1].norm_lil.is_none());
        assert!(trace.points[2].norm_lil.is_some());
        assert!(trace.points[3].norm_lil.is_some());
    }

    #[test]
    fn bounded_sums_drive_norm_to_zero() {
        // Alternating sequence against the constant test has |S(n)| <= 1.
        let s = PeriodicSeq(vec![1, -1]);
        let plan = CheckpointPlan::powers_of_two(1 << 16).unwrap();
        let trace = correlate(&s, &TestFn::constant(1), &plan, 0.05).unwrap();
        let mut last = f64::INFINITY;
        for p in &trace.points {
            assert!(p.norm_n.abs() <= last + 1e-12);
            last = p.norm_n.abs();
        }
        assert!(trace.points.last().unwrap().norm_n.abs() < 1e-4);
    }

    #[test]
    fn plan_validation_errors() {
        let lam = sieve_range(1, 100, SeqKind::Liouville).unwrap();
        let plan = CheckpointPlan::explicit(vec![500]).unwrap();
        let err = correlate(&lam, &TestFn::constant(1), &plan, 0.05).unwrap_err();
        assert!(matches!(err, CorrelateError::CheckpointBeyondData { checkpoint: 500, last: 99 }));

        let tail = sieve_range(50, 100, SeqKind::Liouville).unwrap();
        let plan = CheckpointPlan::explicit(vec![60]).unwrap();
        let err = correlate(&tail, &TestFn::constant(1), &plan, 0.05).unwrap_err();
        assert!(matches!(err, CorrelateError::SourceStartsLate { first: 50 }));

        let plan = CheckpointPlan::explicit(vec![10]).unwrap();
        assert!(matches!(
            correlate(&ConstSeq(1), &TestFn::constant(1), &plan, 0.0),
            Err(CorrelateError::BadEpsilon(_))
        ));
    }

    #[test]
    fn biased_examples() {
        let plan = CheckpointPlan::explicit(vec![40]).unwrap();

        // s = +1, f = +1: every term is p.
        let t = biased_statistic(&ConstSeq(1), &TestFn::constant(1), 0.3, &plan).unwrap();
        assert!((t.points[0].value - 0.3).abs() < 1e-12);

        // Period (+1, +1, +1, -1) with p = 1/4 balances to zero.
        let s = PeriodicSeq(vec![1, 1, 1, -1]);
        let t = biased_statistic(&s, &TestFn::constant(1), 0.25, &plan).unwrap();
        assert_eq!(t.points[0].value, 0.0);
        assert_eq!(t.points[0].base.to_rational_string(), "-10");
        assert_eq!(t.points[0].fsum.to_rational_string(), "40");

        // s = -1, f = +1, p = 1/2: every term is p - 1.
        let t = biased_statistic(&ConstSeq(-1), &TestFn::constant(1), 0.5, &plan).unwrap();
        assert!((t.points[0].value + 0.5).abs() < 1e-12);

        assert!(matches!(
            biased_statistic(&ConstSeq(1), &TestFn::constant(1), 1.0, &plan),
            Err(CorrelateError::BadBias(_))
        ));
    }

    #[test]
    fn csv_shape() {
        let plan = CheckpointPlan::explicit(vec![2, 4]).unwrap();
        let trace = correlate(&ConstSeq(1), &TestFn::constant(1), &plan, 0.05).unwrap();
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "n,raw,norm_n,norm_rh,norm_lil");
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 5);
        assert_eq!(row[0], "2");
        assert_eq!(row[1], "2");
        assert_eq!(row[4], ""); // LIL undefined at n = 2
    }
}
