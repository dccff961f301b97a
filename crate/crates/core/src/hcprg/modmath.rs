//! Modular arithmetic on u64 with u128 intermediates.

pub fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn powmod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Euler criterion for an odd prime p: is `a` a nonzero square mod p?
pub fn is_qr_mod_prime(a: u64, p: u64) -> bool {
    let a = a % p;
    if a == 0 {
        return false;
    }
    powmod(a, (p - 1) / 2, p) == 1
}

/// Deterministic Miller–Rabin, exact for all u64 with this base set.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..r - 1 {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_against_trial_division() {
        fn trial(n: u64) -> bool {
            if n < 2 {
                return false;
            }
            let mut d = 2;
            while d * d <= n {
                if n % d == 0 {
                    return false;
                }
                d += 1;
            }
            true
        }
        for n in 0..3_000u64 {
            assert_eq!(is_prime(n), trial(n), "n={n}");
        }
        assert!(is_prime(2_147_483_647)); // 2^31 - 1
        assert!(!is_prime(2_147_483_649));
    }

    #[test]
    fn powmod_small_cases() {
        assert_eq!(powmod(2, 10, 1_000), 24);
        assert_eq!(powmod(7, 0, 13), 1);
        assert_eq!(powmod(0, 5, 13), 0);
        assert_eq!(powmod(5, 3, 1), 0);
    }

    #[test]
    fn qr_criterion() {
        // Squares mod 7: 1, 2, 4.
        let squares: Vec<u64> = (1..7).filter(|&a| is_qr_mod_prime(a, 7)).collect();
        assert_eq!(squares, vec![1, 2, 4]);
    }
}
