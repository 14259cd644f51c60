//! Finite binary strings, the length-lexicographic order and Cantor pairing.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A finite binary string. The derived `Ord` is plain lexicographic order
/// (prefixes first), which keeps every extension of `σ` contiguous after `σ`
/// inside sorted containers. Use [`str_order`] for searches.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Bits(Vec<u8>);

impl Bits {
    pub fn empty() -> Self {
        Bits(Vec::new())
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(it: I) -> Self {
        Bits(it.into_iter().map(u8::from).collect())
    }

    /// `b` repeated `n` times.
    pub fn repeat(b: bool, n: usize) -> Self {
        Bits(vec![u8::from(b); n])
    }

    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::Parse(format!("not a bit string: {s:?}"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i] == 1
    }

    pub fn push(&mut self, b: bool) {
        self.0.push(u8::from(b));
    }

    pub fn pushed(&self, b: bool) -> Bits {
        let mut c = self.clone();
        c.push(b);
        c
    }

    pub fn concat(&self, other: &Bits) -> Bits {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Bits(v)
    }

    pub fn prefix(&self, n: usize) -> Bits {
        Bits(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn suffix_from(&self, n: usize) -> Bits {
        Bits(self.0[n.min(self.0.len())..].to_vec())
    }

    /// True when `self` is a (not necessarily proper) prefix of `other`.
    pub fn is_prefix_of(&self, other: &Bits) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Parent string, `None` for the empty string.
    pub fn parent(&self) -> Option<Bits> {
        if self.0.is_empty() {
            None
        } else {
            Some(Bits(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn last(&self) -> Option<bool> {
        self.0.last().map(|&b| b == 1)
    }

    /// The string of equal length immediately to the right, if any.
    pub fn right_neighbor(&self) -> Option<Bits> {
        let mut v = self.0.clone();
        for i in (0..v.len()).rev() {
            if v[i] == 0 {
                v[i] = 1;
                for x in &mut v[i + 1..] {
                    *x = 0;
                }
                return Some(Bits(v));
            }
        }
        None
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().map(|&b| b == 1)
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("ε")
        } else {
            write!(f, "{self}")
        }
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Bits::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Macro-free shorthand for tests and scenario code: `bits("0101")`.
pub fn bits(s: &str) -> Bits {
    Bits::parse(s).expect("literal bit string")
}

/// Length-lexicographic order: shorter first, then 0 before 1.
pub fn str_order(a: &Bits, b: &Bits) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.0.cmp(&b.0))
}

/// Cantor pairing `(i+s)(i+s+1)/2 + i`.
pub fn pair(i: u64, s: u64) -> u64 {
    let t = i + s;
    t * (t + 1) / 2 + i
}

/// Inverse of [`pair`].
pub fn unpair(n: u64) -> (u64, u64) {
    // largest t with t(t+1)/2 <= n
    let mut t = (((8 * n as u128 + 1) as f64).sqrt() as u64).saturating_sub(1) / 2;
    while (t + 1) * (t + 2) / 2 <= n {
        t += 1;
    }
    while t * (t + 1) / 2 > n {
        t -= 1;
    }
    let i = n - t * (t + 1) / 2;
    (i, t - i)
}
