use rayon::prelude::*;
use serde::Serialize;

use super::{correlate, CheckpointPlan, CorrelateError, Sequence};
use crate::testlang::{parse, TestFn};

/// Verdict for one battery member.
#[derive(Clone, Debug, Serialize)]
pub struct BatteryEntry {
    pub test: String,
    pub max_abs_norm: f64,
    pub at_checkpoint: u64,
    pub pass: bool,
}

/// Battery verdicts: pass iff every test's largest `|S(n)/n|` beyond the
/// burn-in stays at or below the threshold.
#[derive(Clone, Debug, Serialize)]
pub struct BatteryReport {
    pub threshold: f64,
    pub burn_in: u64,
    pub entries: Vec<BatteryEntry>,
    /// Index into `entries` of the worst offender.
    pub worst: usize,
    pub pass: bool,
}

impl BatteryReport {
    pub fn worst_entry(&self) -> &BatteryEntry {
        &self.entries[self.worst]
    }
}

/// Runs every test against the source with a shared checkpoint plan.
/// Tests run in parallel; entries keep the input order.
pub fn battery(
    s: &dyn Sequence,
    tests: &[(String, TestFn)],
    plan: &CheckpointPlan,
    threshold: f64,
    burn_in: u64,
) -> Result<BatteryReport, CorrelateError> {
    if tests.is_empty() {
        return Err(CorrelateError::EmptyBattery);
    }
    if !plan.checkpoints().iter().any(|&n| n > burn_in) {
        return Err(CorrelateError::NoCheckpointsBeyondBurnIn { burn_in });
    }
    let entries: Vec<BatteryEntry> = tests
        .par_iter()
        .map(|(name, f)| {
            // Epsilon only affects the RH normalization, which the battery
            // verdict ignores.
            let trace = correlate(s, f, plan, 0.05)?;
            let (max_abs_norm, at_checkpoint) =
                trace.max_abs_norm_beyond(burn_in).expect("plan checked above");
            Ok(BatteryEntry {
                test: name.clone(),
                max_abs_norm,
                at_checkpoint,
                pass: max_abs_norm <= threshold,
            })
        })
        .collect::<Result<_, CorrelateError>>()?;

    let worst = entries
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.max_abs_norm.total_cmp(&b.1.max_abs_norm).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap();
    let pass = entries.iter().all(|e| e.pass);
    Ok(BatteryReport { threshold, burn_in, entries, worst, pass })
}

/// The stock battery: residue signs, low bits, popcount thresholds, short
/// products and the constant test. Twenty members.
pub fn default_battery() -> Vec<(String, TestFn)> {
    const SOURCES: [&str; 20] = [
        "1",
        "pm(n % 2 == 0)",
        "pm(n % 3 == 0)",
        "pm(n % 4 == 0)",
        "pm(n % 5 == 0)",
        "pm(n % 6 == 0)",
        "pm(n % 7 == 0)",
        "pm(n % 8 == 0)",
        "pm(n % 9 == 0)",
        "pm(n % 10 == 0)",
        "pm(bit(n, 0))",
        "pm(bit(n, 1))",
        "pm(bit(n, 2))",
        "pm(bit(n, 3))",
        "pm(popcount(n) >= 10)",
        "pm(popcount(n) >= 12)",
        "pm(bit(n, 0) xor bit(n, 1))",
        "pm(bit(n, 0)) * pm(bit(n, 1))",
        "pm(n % 3 == 0) * pm(n % 2 == 0)",
        "pm(bit(n, 2)) * pm(n % 5 == 0)",
    ];
    SOURCES
        .iter()
        .map(|src| (src.to_string(), parse(src).expect("stock battery parses")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::ConstSeq;
    use super::*;
    use crate::seqkernel::{sieve_range, SeqKind};

    #[test]
    fn default_battery_is_well_formed() {
        let tests = default_battery();
        assert_eq!(tests.len(), 20);
        for (name, f) in &tests {
            assert!(f.is_ternary(), "{name}");
            let reparsed = parse(name).unwrap();
            assert_eq!(&reparsed, f);
        }
    }

    #[test]
    fn constant_sequence_fails_constant_test() {
        let tests = default_battery();
        let plan = CheckpointPlan::powers_of_two(1 << 12).unwrap();
        let report = battery(&ConstSeq(1), &tests, &plan, 0.5, 1).unwrap();
        assert!(!report.pass);
        let worst = report.worst_entry();
        assert_eq!(worst.test, "1");
        assert_eq!(worst.max_abs_norm, 1.0);
    }

    #[test]
    fn liouville_passes_at_modest_threshold() {
        let n = 1 << 16;
        let lam = sieve_range(1, n + 1, SeqKind::Liouville).unwrap();
        let tests = default_battery();
        let plan = CheckpointPlan::powers_of_two(n).unwrap();
        let report = battery(&lam, &tests, &plan, 0.1, 1 << 12).unwrap();
        assert!(
            report.pass,
            "worst: {} at {} = {}",
            report.worst_entry().test,
            report.worst_entry().at_checkpoint,
            report.worst_entry().max_abs_norm
        );
        assert_eq!(report.entries.len(), tests.len());
    }

    #[test]
    fn empty_battery_rejected() {
        let plan = CheckpointPlan::powers_of_two(16).unwrap();
        assert!(matches!(
            battery(&ConstSeq(1), &[], &plan, 0.5, 1),
            Err(CorrelateError::EmptyBattery)
        ));
    }

    #[test]
    fn burn_in_must_leave_checkpoints() {
        let tests = default_battery();
        let plan = CheckpointPlan::powers_of_two(16).unwrap();
        assert!(matches!(
            battery(&ConstSeq(1), &tests, &plan, 0.5, 16),
            Err(CorrelateError::NoCheckpointsBeyondBurnIn { burn_in: 16 })
        ));
    }

    #[test]
    fn threshold_two_cannot_fail_pm_data() {
        let lam = sieve_range(1, 1_025, SeqKind::Liouville).unwrap();
        let tests = default_battery();
        let plan = CheckpointPlan::powers_of_two(1_024).unwrap();
        let report = battery(&lam, &tests, &plan, 2.0, 1).unwrap();
        assert!(report.pass);
    }
}
