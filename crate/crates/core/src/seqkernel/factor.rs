use super::{SeqError, SeqKind};

/// Prime factorization of one natural number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorView {
    pub n: u64,
    /// `(prime, exponent)` pairs with strictly increasing primes and
    /// exponents at least 1. Empty exactly for `n = 1`.
    pub factors: Vec<(u64, u32)>,
}

impl FactorView {
    /// Number of prime factors counted with multiplicity.
    pub fn big_omega(&self) -> u32 {
        self.factors.iter().map(|&(_, e)| e).sum()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e < 2)
    }

    /// Splits `n = k^2 * i` with `i` squarefree, returning `(k, i)`.
    pub fn square_split(&self) -> (u64, u64) {
        let mut k = 1u64;
        let mut i = 1u64;
        for &(p, e) in &self.factors {
            k *= p.pow(e / 2);
            if e % 2 == 1 {
                i *= p;
            }
        }
        (k, i)
    }
}

/// Trial-division factorization; the spot-check path, independent of the
/// segmented sieve.
pub fn factorize(n: u64) -> Result<FactorView, SeqError> {
    if n == 0 {
        return Err(SeqError::ZeroOutOfDomain);
    }
    let mut rest = n;
    let mut factors = Vec::new();
    let mut push = |p: u64, rest: &mut u64| {
        let mut e = 0;
        while *rest % p == 0 {
            *rest /= p;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
    };
    push(2, &mut rest);
    let mut d = 3u64;
    while d.checked_mul(d).map_or(false, |sq| sq <= rest) {
        push(d, &mut rest);
        d += 2;
    }
    if rest > 1 {
        factors.push((rest, 1));
    }
    Ok(FactorView { n, factors })
}

/// Single value of λ or μ at `n`, via factorization.
pub fn value_at(n: u64, kind: SeqKind) -> Result<i8, SeqError> {
    let view = factorize(n)?;
    let sign: i8 = if view.big_omega() % 2 == 0 { 1 } else { -1 };
    match kind {
        SeqKind::Liouville => Ok(sign),
        SeqKind::Mobius => Ok(if view.is_squarefree() { sign } else { 0 }),
        SeqKind::Custom => Err(SeqError::NotSievable(kind)),
    }
}

/// Smallest-prime-factor table for `1..=limit`; `spf[p] == p` marks primes,
/// `spf[1] == 1`.
pub fn spf_sieve(limit: usize) -> Vec<u32> {
    assert!(limit < u32::MAX as usize, "spf table limited to u32 entries");
    let mut spf: Vec<u32> = vec![0; limit + 1];
    for (i, slot) in spf.iter_mut().enumerate() {
        *slot = i as u32;
    }
    let mut p = 2usize;
    while p * p <= limit {
        if spf[p] == p as u32 {
            let mut m = p * p;
            while m <= limit {
                if spf[m] == m as u32 {
                    spf[m] = p as u32;
                }
                m += p;
            }
        }
        p += 1;
    }
    spf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorize_examples() {
        assert_eq!(factorize(1).unwrap().factors, vec![]);
        assert_eq!(factorize(12).unwrap().factors, vec![(2, 2), (3, 1)]);
        assert_eq!(factorize(97).unwrap().factors, vec![(97, 1)]);
        assert!(matches!(factorize(0), Err(SeqError::ZeroOutOfDomain)));
    }

    #[test]
    fn factorization_invariants() {
        for n in 1..=5_000u64 {
            let view = factorize(n).unwrap();
            let product: u64 = view.factors.iter().map(|&(p, e)| p.pow(e)).product();
            assert_eq!(product, n);
            assert!(view.factors.windows(2).all(|w| w[0].0 < w[1].0));
            assert!(view.factors.iter().all(|&(_, e)| e >= 1));
            let (k, i) = view.square_split();
            assert_eq!(k * k * i, n);
            assert!(factorize(i).unwrap().is_squarefree());
        }
    }

    #[test]
    fn value_at_examples() {
        assert_eq!(value_at(1024, SeqKind::Liouville).unwrap(), 1);
        assert_eq!(value_at(1024, SeqKind::Mobius).unwrap(), 0);
        assert_eq!(value_at(30, SeqKind::Mobius).unwrap(), -1);
        assert!(value_at(0, SeqKind::Liouville).is_err());
        assert!(value_at(7, SeqKind::Custom).is_err());
    }

    #[test]
    fn spf_agrees_with_factorize() {
        let spf = spf_sieve(2_000);
        for n in 2..=2_000usize {
            let smallest = factorize(n as u64).unwrap().factors[0].0;
            assert_eq!(spf[n] as u64, smallest, "n={n}");
        }
    }

    #[test]
    fn mu_lambda_relation_small() {
        for n in 1..=2_000u64 {
            let lam = value_at(n, SeqKind::Liouville).unwrap();
            let mu = value_at(n, SeqKind::Mobius).unwrap();
            if mu != 0 {
                assert_eq!(mu, lam, "n={n}");
            }
            let squarefull = factorize(n).unwrap().factors.iter().any(|&(_, e)| e >= 2);
            assert_eq!(mu == 0, squarefull, "n={n}");
        }
    }
}
