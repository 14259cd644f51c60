//! Exact dyadic rationals `a / 2^k`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const DEFAULT_EXPONENT_CAP: u64 = 4096;

/// Non-negative dyadic rational, kept normalized: odd numerator, or zero
/// stored as `0/2^0`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: BigUint,
    exp: u64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { num: BigUint::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        Dyadic { num: BigUint::one(), exp: 0 }
    }

    /// `num / 2^exp`, normalized.
    pub fn new(num: BigUint, exp: u64) -> Self {
        let mut d = Dyadic { num, exp };
        d.normalize();
        d
    }

    pub fn from_u64(num: u64, exp: u64) -> Self {
        Self::new(BigUint::from(num), exp)
    }

    /// `2^{-k}`.
    pub fn pow2_neg(k: u64) -> Self {
        Dyadic { num: BigUint::one(), exp: k }
    }

    /// `2^{-k}` with the exponent checked against `cap`.
    pub fn pow2_neg_capped(k: u64, cap: u64) -> Result<Self> {
        if k > cap {
            return Err(Error::ExponentCap(k));
        }
        Ok(Self::pow2_neg(k))
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.num.trailing_zeros().unwrap_or(0).min(self.exp);
        if tz > 0 {
            self.num >>= tz as usize;
            self.exp -= tz;
        }
    }

    pub fn numerator(&self) -> &BigUint {
        &self.num
    }

    pub fn exponent(&self) -> u64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn aligned(&self, other: &Dyadic) -> (BigUint, BigUint, u64) {
        let e = self.exp.max(other.exp);
        let a = &self.num << (e - self.exp) as usize;
        let b = &other.num << (e - other.exp) as usize;
        (a, b, e)
    }

    /// `self - other`, or `None` when the result would be negative.
    pub fn checked_sub(&self, other: &Dyadic) -> Option<Dyadic> {
        let (a, b, e) = self.aligned(other);
        if a < b {
            None
        } else {
            Some(Dyadic::new(a - b, e))
        }
    }

    /// Multiply by `2^{-k}`.
    pub fn shr(&self, k: u64) -> Dyadic {
        Dyadic::new(self.num.clone(), self.exp + k)
    }

    /// `self · n`.
    pub fn mul_u64(&self, n: u64) -> Dyadic {
        Dyadic::new(&self.num * BigUint::from(n), self.exp)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("not a dyadic: {s:?}"));
        let (a, k) = s.split_once("/2^").ok_or_else(bad)?;
        let num: BigUint = a.trim().parse().map_err(|_| bad())?;
        let exp: u64 = k.trim().parse().map_err(|_| bad())?;
        Ok(Dyadic::new(num, exp))
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, other: &Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(other);
        Dyadic::new(a + b, e)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, other: Dyadic) -> Dyadic {
        &self + &other
    }
}

impl std::iter::Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::zero(), |a, b| &a + &b)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.exp)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Dyadic::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normal_form() {
        assert_eq!(Dyadic::from_u64(4, 3), Dyadic::from_u64(1, 1));
        assert_eq!(Dyadic::from_u64(0, 9).exponent(), 0);
        assert_eq!(Dyadic::from_u64(6, 2).to_string(), "3/2^1");
        assert_eq!(Dyadic::parse("3/2^2").unwrap(), Dyadic::from_u64(6, 3));
        assert!(Dyadic::parse("3/4").is_err());
    }

    #[test]
    fn deep_exponents_are_exact() {
        let tiny = Dyadic::pow2_neg(4000);
        let s = &Dyadic::pow2_neg(1) + &tiny;
        assert!(s > Dyadic::pow2_neg(1));
        assert_eq!(s.checked_sub(&tiny).unwrap(), Dyadic::pow2_neg(1));
        assert!(Dyadic::pow2_neg_capped(5000, DEFAULT_EXPONENT_CAP).is_err());
    }

    proptest! {
        #[test]
        fn add_sub_inverse(a in 0u64..1 << 20, ea in 0u64..40, b in 0u64..1 << 20, eb in 0u64..40) {
            let x = Dyadic::from_u64(a, ea);
            let y = Dyadic::from_u64(b, eb);
            let s = &x + &y;
            prop_assert_eq!(s.checked_sub(&y).unwrap(), x.clone());
            prop_assert!(s >= x);
            prop_assert_eq!(x.checked_sub(&y).is_some(), x >= y);
        }
    }
}
