use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A dyadic rational `num / 2^exp`, kept normalized: `num` is odd, or the
/// value is exactly zero with `exp == 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dyadic {
    num: i64,
    exp: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, exp: 0 };
    pub const NEG_ONE: Dyadic = Dyadic { num: -1, exp: 0 };
    pub const HALF: Dyadic = Dyadic { num: 1, exp: 1 };

    pub fn new(num: i64, exp: u32) -> Dyadic {
        let mut num = num;
        let mut exp = exp;
        if num == 0 {
            return Dyadic::ZERO;
        }
        while num % 2 == 0 && exp > 0 {
            num /= 2;
            exp -= 1;
        }
        Dyadic { num, exp }
    }

    pub fn from_int(value: i64) -> Dyadic {
        Dyadic { num: value, exp: 0 }
    }

    /// `num / den` where `den` must be a power of two.
    pub fn ratio(num: i64, den: u64) -> Option<Dyadic> {
        if den == 0 || !den.is_power_of_two() {
            return None;
        }
        Some(Dyadic::new(num, den.trailing_zeros()))
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn exp(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn signum(&self) -> i8 {
        self.num.signum() as i8
    }

    pub fn neg(&self) -> Dyadic {
        Dyadic { num: -self.num, exp: self.exp }
    }

    pub fn abs(&self) -> Dyadic {
        Dyadic { num: self.num.abs(), exp: self.exp }
    }

    pub fn add(&self, other: &Dyadic) -> Dyadic {
        let exp = self.exp.max(other.exp);
        let a = (self.num as i128) << (exp - self.exp);
        let b = (other.num as i128) << (exp - other.exp);
        let sum = a + b;
        Dyadic::new(i64::try_from(sum).expect("dyadic addition overflow"), exp)
    }

    pub fn sub(&self, other: &Dyadic) -> Dyadic {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        let num = (self.num as i128) * (other.num as i128);
        Dyadic::new(i64::try_from(num).expect("dyadic multiplication overflow"), self.exp + other.exp)
    }

    pub fn scale_int(&self, k: i64) -> Dyadic {
        self.mul(&Dyadic::from_int(k))
    }

    /// 2^-exp as a value.
    pub fn power_of_two(exp: u32) -> Dyadic {
        Dyadic { num: 1, exp }
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / (2f64).powi(self.exp as i32)
    }

    /// |x| <= 1.
    pub fn in_unit_interval(&self) -> bool {
        self.abs().cmp(&Dyadic::ONE) != Ordering::Greater
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Dyadic) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Dyadic) -> Ordering {
        let exp = self.exp.max(other.exp);
        let a = (self.num as i128) << (exp - self.exp);
        let b = (other.num as i128) << (exp - other.exp);
        a.cmp(&b)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, 1u64 << self.exp)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(Dyadic::new(4, 3), Dyadic::HALF);
        assert_eq!(Dyadic::new(0, 7), Dyadic::ZERO);
        assert_eq!(Dyadic::ratio(3, 8).unwrap(), Dyadic::new(3, 3));
        assert_eq!(Dyadic::ratio(1, 1).unwrap(), Dyadic::ONE);
        assert!(Dyadic::ratio(1, 3).is_none());
        assert!(Dyadic::ratio(1, 0).is_none());
    }

    #[test]
    fn arithmetic() {
        let half = Dyadic::HALF;
        let quarter = Dyadic::ratio(1, 4).unwrap();
        assert_eq!(half.add(&quarter), Dyadic::ratio(3, 4).unwrap());
        assert_eq!(half.sub(&half), Dyadic::ZERO);
        assert_eq!(half.mul(&quarter), Dyadic::ratio(1, 8).unwrap());
        assert_eq!(half.scale_int(-2), Dyadic::NEG_ONE);
        assert_eq!(half.add(&half), Dyadic::ONE);
    }

    #[test]
    fn ordering_and_range() {
        assert!(Dyadic::ratio(3, 8).unwrap() < Dyadic::HALF);
        assert!(Dyadic::NEG_ONE < Dyadic::ZERO);
        assert!(Dyadic::ONE.in_unit_interval());
        assert!(!Dyadic::ratio(5, 4).unwrap().in_unit_interval());
        assert!(Dyadic::ratio(-8, 8).unwrap().in_unit_interval());
    }

    #[test]
    fn display() {
        assert_eq!(Dyadic::ratio(3, 8).unwrap().to_string(), "3/8");
        assert_eq!(Dyadic::from_int(-2).to_string(), "-2");
        assert_eq!(Dyadic::ZERO.to_string(), "0");
    }
}
