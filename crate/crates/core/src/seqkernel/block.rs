use serde::{Deserialize, Serialize};

use super::SeqError;

/// Which arithmetic sequence a block holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeqKind {
    Liouville,
    Mobius,
    Custom,
}

impl SeqKind {
    pub fn byte(self) -> u8 {
        match self {
            SeqKind::Liouville => 0x00,
            SeqKind::Mobius => 0x01,
            SeqKind::Custom => 0x02,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x00 => Some(SeqKind::Liouville),
            0x01 => Some(SeqKind::Mobius),
            0x02 => Some(SeqKind::Custom),
            _ => None,
        }
    }

    /// Liouville values are always nonzero; the other kinds may hold 0.
    pub fn zero_allowed(self) -> bool {
        !matches!(self, SeqKind::Liouville)
    }
}

impl std::fmt::Display for SeqKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeqKind::Liouville => write!(f, "liouville"),
            SeqKind::Mobius => write!(f, "mobius"),
            SeqKind::Custom => write!(f, "custom"),
        }
    }
}

// Packed ternary codes, two bits per value.
const CODE_NEG: u8 = 0b00;
const CODE_ZERO: u8 = 0b01;
const CODE_POS: u8 = 0b10;

/// A contiguous range `[lo, hi)` of a `{-1, 0, +1}`-valued sequence,
/// bit-packed at two bits per value.
///
/// Immutable after construction; cheap to share across threads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeqBlock {
    lo: u64,
    hi: u64,
    kind: SeqKind,
    data: Vec<u8>,
}

impl SeqBlock {
    /// Packs `values` as the entries for `n = lo, lo+1, ...`.
    pub fn from_values(lo: u64, kind: SeqKind, values: &[i8]) -> Result<Self, SeqError> {
        let hi = lo
            .checked_add(values.len() as u64)
            .ok_or(SeqError::RangeTooHigh { hi: u64::MAX, max: u64::MAX })?;
        if values.is_empty() {
            return Err(SeqError::EmptyRange { lo, hi });
        }
        let mut data = vec![0u8; values.len().div_ceil(4)];
        for (i, &v) in values.iter().enumerate() {
            let code = match v {
                -1 => CODE_NEG,
                0 => CODE_ZERO,
                1 => CODE_POS,
                other => {
                    return Err(SeqError::BadTernary { value: other, n: lo + i as u64 });
                }
            };
            if v == 0 && !kind.zero_allowed() {
                return Err(SeqError::KindViolation { kind, value: v, n: lo + i as u64 });
            }
            data[i / 4] |= code << (2 * (i % 4));
        }
        Ok(SeqBlock { lo, hi, kind, data })
    }

    /// Rebuilds a block from its packed payload, validating every code.
    pub(crate) fn from_packed(lo: u64, hi: u64, kind: SeqKind, data: Vec<u8>) -> Result<Self, SeqError> {
        if lo >= hi {
            return Err(SeqError::EmptyRange { lo, hi });
        }
        let len = hi - lo;
        let expected = (len as usize).div_ceil(4);
        if data.len() != expected {
            return Err(SeqError::Truncated { expected: expected as u64, found: data.len() as u64 });
        }
        let block = SeqBlock { lo, hi, kind, data };
        for (i, v) in block.codes().enumerate() {
            let n = lo + i as u64;
            match v {
                CODE_NEG | CODE_POS => {}
                CODE_ZERO => {
                    if !kind.zero_allowed() {
                        return Err(SeqError::KindViolation { kind, value: 0, n });
                    }
                }
                _ => return Err(SeqError::ReservedCode { n }),
            }
        }
        Ok(block)
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn kind(&self) -> SeqKind {
        self.kind
    }

    pub fn len(&self) -> u64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        false // lo < hi is a construction invariant
    }

    pub fn contains(&self, n: u64) -> bool {
        n >= self.lo && n < self.hi
    }

    pub(crate) fn payload(&self) -> &[u8] {
        &self.data
    }

    /// Value at `n`. Panics when `n` is outside `[lo, hi)`.
    pub fn get(&self, n: u64) -> i8 {
        self.try_get(n)
            .unwrap_or_else(|| panic!("n = {n} outside block range [{}, {})", self.lo, self.hi))
    }

    pub fn try_get(&self, n: u64) -> Option<i8> {
        if !self.contains(n) {
            return None;
        }
        let i = (n - self.lo) as usize;
        let code = (self.data[i / 4] >> (2 * (i % 4))) & 0b11;
        Some(decode(code))
    }

    /// Iterates values for `n = lo..hi` in order.
    pub fn values(&self) -> impl Iterator<Item = i8> + '_ {
        self.codes().map(decode)
    }

    fn codes(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len() as usize).map(move |i| (self.data[i / 4] >> (2 * (i % 4))) & 0b11)
    }

    /// Concatenates adjacent blocks of one kind into a single block.
    pub fn concat(parts: &[SeqBlock]) -> Result<Self, SeqError> {
        let first = parts.first().ok_or(SeqError::EmptyRange { lo: 0, hi: 0 })?;
        let mut values = Vec::with_capacity(parts.iter().map(|p| p.len() as usize).sum());
        let mut expect = first.lo;
        for part in parts {
            if part.lo != expect {
                return Err(SeqError::EmptyRange { lo: part.lo, hi: expect });
            }
            values.extend(part.values());
            expect = part.hi;
        }
        SeqBlock::from_values(first.lo, first.kind, &values)
    }
}

fn decode(code: u8) -> i8 {
    match code {
        CODE_NEG => -1,
        CODE_ZERO => 0,
        CODE_POS => 1,
        _ => unreachable!("reserved code validated at construction"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pack_roundtrip() {
        let vals = [1i8, -1, 0, 1, -1, -1, 0, 0, 1];
        let block = SeqBlock::from_values(5, SeqKind::Custom, &vals).unwrap();
        assert_eq!(block.lo(), 5);
        assert_eq!(block.hi(), 14);
        assert_eq!(block.len(), 9);
        let got: Vec<i8> = block.values().collect();
        assert_eq!(&got, &vals);
        assert_eq!(block.get(5), 1);
        assert_eq!(block.get(7), 0);
        assert_eq!(block.try_get(14), None);
        assert_eq!(block.try_get(4), None);
    }

    #[test]
    fn liouville_rejects_zero() {
        let err = SeqBlock::from_values(1, SeqKind::Liouville, &[1, 0]).unwrap_err();
        assert!(matches!(err, SeqError::KindViolation { n: 2, .. }));
    }

    #[test]
    fn rejects_out_of_alphabet() {
        let err = SeqBlock::from_values(1, SeqKind::Custom, &[2]).unwrap_err();
        assert!(matches!(err, SeqError::BadTernary { value: 2, n: 1 }));
    }

    #[test]
    fn empty_rejected() {
        assert!(SeqBlock::from_values(1, SeqKind::Custom, &[]).is_err());
    }
}
