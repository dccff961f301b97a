//! Textual forms for sets, checkpoint plans and schedules.
//!
//! Set syntax:
//!   `all` | `empty` | `evens` | `odds` | `squares`
//!   `mult:M`           multiples of M
//!   `mod:M:R`          the residue class R mod M
//!   `lambda=+1`        Liouville value (+1 or -1)
//!   `mu=+1`            Möbius value (+1, -1 or 0)
//!   `test:EXPR`        ternary test function; members where it is +1
//!
//! Checkpoint syntax: `pow2` or a comma-separated increasing list.

use prlab_core::correlate::CheckpointPlan;
use prlab_core::density::{KPlan, SetSpec};
use prlab_core::seqkernel::SeqKind;
use prlab_core::testlang;

pub fn parse_set(text: &str) -> Result<SetSpec, String> {
    let text = text.trim();
    match text {
        "all" => return Ok(SetSpec::All),
        "empty" => return Ok(SetSpec::Empty),
        "evens" => return Ok(SetSpec::evens()),
        "odds" => return Ok(SetSpec::odds()),
        "squares" => return Ok(SetSpec::PerfectSquares),
        _ => {}
    }
    if let Some(rest) = text.strip_prefix("mult:") {
        let m: u64 = rest.parse().map_err(|_| format!("bad multiplier in `{text}`"))?;
        if m == 0 {
            return Err("multiplier must be at least 1".into());
        }
        return Ok(SetSpec::multiples_of(m));
    }
    if let Some(rest) = text.strip_prefix("mod:") {
        let (m, r) = rest.split_once(':').ok_or_else(|| format!("expected mod:M:R in `{text}`"))?;
        let modulus: u64 = m.parse().map_err(|_| format!("bad modulus in `{text}`"))?;
        let residue: u64 = r.parse().map_err(|_| format!("bad residue in `{text}`"))?;
        if modulus == 0 || residue >= modulus {
            return Err(format!("need 0 <= residue < modulus in `{text}`"));
        }
        return Ok(SetSpec::Residue { modulus, residue });
    }
    if let Some(rest) = text.strip_prefix("test:") {
        let f = testlang::parse(rest).map_err(|e| e.to_string())?;
        if !f.is_ternary() {
            return Err("membership tests must be ternary-typed".into());
        }
        return Ok(SetSpec::Test(f));
    }
    for (prefix, kind) in [("lambda=", SeqKind::Liouville), ("mu=", SeqKind::Mobius)] {
        if let Some(rest) = text.strip_prefix(prefix) {
            let value: i8 = match rest {
                "+1" | "1" => 1,
                "-1" => -1,
                "0" if kind == SeqKind::Mobius => 0,
                other => return Err(format!("bad sequence value `{other}` in `{text}`")),
            };
            return Ok(SetSpec::Sequence { kind, value });
        }
    }
    Err(format!(
        "unrecognized set `{text}` (expected all, empty, evens, odds, squares, mult:M, mod:M:R, lambda=±1, mu=…, or test:EXPR)"
    ))
}

/// Sequence kinds a set's membership needs data for.
pub fn kinds_needed(set: &SetSpec, out: &mut Vec<SeqKind>) {
    match set {
        SetSpec::Sequence { kind, .. } => {
            if !out.contains(kind) {
                out.push(*kind);
            }
        }
        SetSpec::Complement(a) => kinds_needed(a, out),
        SetSpec::Union(a, b) | SetSpec::Intersect(a, b) => {
            kinds_needed(a, out);
            kinds_needed(b, out);
        }
        _ => {}
    }
}

pub fn parse_correlate_checkpoints(text: &str, n_max: u64) -> Result<CheckpointPlan, String> {
    if text == "pow2" {
        return CheckpointPlan::powers_of_two(n_max).map_err(|e| e.to_string());
    }
    let points = parse_u64_list(text)?;
    CheckpointPlan::explicit(points).map_err(|e| e.to_string())
}

pub fn parse_kplan(text: &str, cap: u64) -> Result<KPlan, String> {
    if text == "pow2" {
        return KPlan::powers_of_two(cap).map_err(|e| e.to_string());
    }
    let points = parse_u64_list(text)?;
    KPlan::explicit(points).map_err(|e| e.to_string())
}

pub fn parse_u64_list(text: &str) -> Result<Vec<u64>, String> {
    text.split(',')
        .map(|part| part.trim().parse::<u64>().map_err(|_| format!("bad number `{}`", part.trim())))
        .collect()
}

/// `LO:HI` with `LO < HI`; the upper end is exclusive.
pub fn parse_range(text: &str) -> Result<(u64, u64), String> {
    let (lo, hi) = text.split_once(':').ok_or_else(|| format!("expected LO:HI, got `{text}`"))?;
    let lo: u64 = lo.trim().parse().map_err(|_| format!("bad range start `{lo}`"))?;
    let hi: u64 = hi.trim().parse().map_err(|_| format!("bad range end `{hi}`"))?;
    if lo >= hi {
        return Err(format!("range start {lo} must be below end {hi}"));
    }
    Ok((lo, hi))
}

pub fn parse_seq_kind(text: &str) -> Result<SeqKind, String> {
    match text {
        "liouville" | "lambda" => Ok(SeqKind::Liouville),
        "mobius" | "mu" => Ok(SeqKind::Mobius),
        other => Err(format!("unknown sequence kind `{other}` (liouville or mobius)")),
    }
}
