use rayon::prelude::*;

use super::{SeqBlock, SeqError, SeqKind};

/// Largest `hi` the sieve accepts. Keeps the base prime table at or below
/// 2^20 entries.
pub const MAX_HI: u64 = 1 << 40;

/// Largest number of values in one block (512 MiB packed).
pub const MAX_BLOCK_LEN: u64 = 1 << 31;

/// Default sieving window width.
pub const DEFAULT_WINDOW: usize = 1 << 20;

/// Sieves `kind` over `[lo, hi)` with the default window width.
pub fn sieve_range(lo: u64, hi: u64, kind: SeqKind) -> Result<SeqBlock, SeqError> {
    sieve_range_with_window(lo, hi, kind, DEFAULT_WINDOW)
}

/// Sieves `kind` over `[lo, hi)` in windows of at most `window` values.
///
/// Windows are independent and processed in parallel; the result is
/// identical for any window width and worker count.
pub fn sieve_range_with_window(
    lo: u64,
    hi: u64,
    kind: SeqKind,
    window: usize,
) -> Result<SeqBlock, SeqError> {
    if lo == 0 {
        return Err(SeqError::ZeroOutOfDomain);
    }
    if lo >= hi {
        return Err(SeqError::EmptyRange { lo, hi });
    }
    if hi > MAX_HI {
        return Err(SeqError::RangeTooHigh { hi, max: MAX_HI });
    }
    if hi - lo > MAX_BLOCK_LEN {
        return Err(SeqError::BlockTooLarge { len: hi - lo, max: MAX_BLOCK_LEN });
    }
    if !matches!(kind, SeqKind::Liouville | SeqKind::Mobius) {
        return Err(SeqError::NotSievable(kind));
    }
    let window = window.max(1) as u64;
    let primes = primes_upto((hi - 1).isqrt());

    let windows: Vec<(u64, u64)> = {
        let mut ws = Vec::new();
        let mut start = lo;
        while start < hi {
            let end = hi.min(start + window);
            ws.push((start, end));
            start = end;
        }
        ws
    };

    let parts: Vec<Vec<i8>> = windows
        .par_iter()
        .map(|&(wlo, whi)| sieve_window(wlo, whi, &primes, kind))
        .collect();

    let mut values = Vec::with_capacity((hi - lo) as usize);
    for part in parts {
        values.extend_from_slice(&part);
    }
    SeqBlock::from_values(lo, kind, &values)
}

/// One window `[wlo, whi)`: divide out every prime below sqrt(whi), then a
/// single leftover factor above the bound accounts for the rest.
fn sieve_window(wlo: u64, whi: u64, primes: &[u64], kind: SeqKind) -> Vec<i8> {
    let len = (whi - wlo) as usize;
    let mut remaining: Vec<u64> = (wlo..whi).collect();
    let mut omega = vec![0u8; len];
    let mut squarefree = vec![true; len];

    let bound = (whi - 1).isqrt();
    let cutoff = primes.partition_point(|&p| p <= bound);
    for &p in &primes[..cutoff] {
        let start = wlo.div_ceil(p) * p;
        let mut m = start;
        while m < whi {
            let i = (m - wlo) as usize;
            let mut e = 0u8;
            while remaining[i] % p == 0 {
                remaining[i] /= p;
                e += 1;
            }
            omega[i] += e;
            if e >= 2 {
                squarefree[i] = false;
            }
            m += p;
        }
    }

    (0..len)
        .map(|i| {
            let total = omega[i] + u8::from(remaining[i] > 1);
            let lambda: i8 = if total % 2 == 0 { 1 } else { -1 };
            match kind {
                SeqKind::Liouville => lambda,
                SeqKind::Mobius => {
                    if squarefree[i] {
                        lambda
                    } else {
                        0
                    }
                }
                SeqKind::Custom => unreachable!("rejected before sieving"),
            }
        })
        .collect()
}

pub(crate) fn primes_upto(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let limit = limit as usize;
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for p in 2..=limit {
        if composite[p] {
            continue;
        }
        primes.push(p as u64);
        let mut m = p * p;
        while m <= limit {
            composite[m] = true;
            m += p;
        }
    }
    primes
}

#[cfg(test)]
mod tests {
    use super::*;

    // Trial-division reference, independent of the windowed path above.
    fn oracle(n: u64) -> (u32, bool) {
        let mut n = n;
        let mut omega = 0;
        let mut squarefree = true;
        let mut d = 2;
        while d * d <= n {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            if e >= 2 {
                squarefree = false;
            }
            omega += e;
            d += 1;
        }
        if n > 1 {
            omega += 1;
        }
        (omega, squarefree)
    }

    fn oracle_lambda(n: u64) -> i8 {
        if oracle(n).0 % 2 == 0 {
            1
        } else {
            -1
        }
    }

    fn oracle_mu(n: u64) -> i8 {
        let (omega, squarefree) = oracle(n);
        if !squarefree {
            0
        } else if omega % 2 == 0 {
            1
        } else {
            -1
        }
    }

    #[test]
    fn first_ten_liouville() {
        let block = sieve_range(1, 11, SeqKind::Liouville).unwrap();
        let got: Vec<i8> = block.values().collect();
        assert_eq!(got, vec![1, -1, -1, 1, -1, 1, -1, -1, 1, 1]);
    }

    #[test]
    fn mobius_point_values() {
        let block = sieve_range(1, 2, SeqKind::Mobius).unwrap();
        assert_eq!(block.get(1), 1);
        let block = sieve_range(4, 5, SeqKind::Mobius).unwrap();
        assert_eq!(block.get(4), 0);
    }

    #[test]
    fn matches_oracle_to_20000() {
        let lam = sieve_range(1, 20_001, SeqKind::Liouville).unwrap();
        let mob = sieve_range(1, 20_001, SeqKind::Mobius).unwrap();
        for n in 1..=20_000u64 {
            assert_eq!(lam.get(n), oracle_lambda(n), "lambda({n})");
            assert_eq!(mob.get(n), oracle_mu(n), "mu({n})");
        }
    }

    #[test]
    fn offset_window_matches_full_sieve() {
        let full = sieve_range(1, 5_000, SeqKind::Mobius).unwrap();
        let part = sieve_range(3_000, 4_000, SeqKind::Mobius).unwrap();
        for n in 3_000..4_000 {
            assert_eq!(part.get(n), full.get(n));
        }
    }

    #[test]
    fn window_width_is_irrelevant() {
        for width in [1usize, 7, 64, 1000, 1 << 20] {
            let b = sieve_range_with_window(1, 3_001, SeqKind::Liouville, width).unwrap();
            let r = sieve_range(1, 3_001, SeqKind::Liouville).unwrap();
            assert_eq!(b, r, "window width {width}");
        }
    }

    #[test]
    fn segment_partition_concatenates() {
        let full = sieve_range(1, 2_049, SeqKind::Liouville).unwrap();
        let parts = [
            sieve_range(1, 100, SeqKind::Liouville).unwrap(),
            sieve_range(100, 1_024, SeqKind::Liouville).unwrap(),
            sieve_range(1_024, 2_049, SeqKind::Liouville).unwrap(),
        ];
        assert_eq!(SeqBlock::concat(&parts).unwrap(), full);
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(matches!(sieve_range(0, 5, SeqKind::Liouville), Err(SeqError::ZeroOutOfDomain)));
        assert!(matches!(sieve_range(5, 5, SeqKind::Liouville), Err(SeqError::EmptyRange { .. })));
        assert!(matches!(
            sieve_range(1, MAX_HI + 1, SeqKind::Liouville),
            Err(SeqError::RangeTooHigh { .. })
        ));
        assert!(matches!(sieve_range(1, 5, SeqKind::Custom), Err(SeqError::NotSievable(_))));
    }

    #[test]
    fn complete_multiplicativity_sampled() {
        // Factors come from the sieve, products from the independent
        // factorization path.
        let block = sieve_range(1, 10_001, SeqKind::Liouville).unwrap();
        let mut m = 1u64;
        while m <= 10_000 {
            let mut n = 1u64;
            while n <= 10_000 {
                let product = crate::seqkernel::value_at(m * n, SeqKind::Liouville).unwrap();
                assert_eq!(product, block.get(m) * block.get(n), "m={m} n={n}");
                n = n * 3 + 1;
            }
            m = m * 2 + 1;
        }
    }

}
