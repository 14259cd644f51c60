//! Canonical clopen subsets of Cantor space and the searches run over them.

use std::collections::BTreeSet;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::Bits;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_traits::One;

/// Prefix queries over a lexicographically sorted set of strings.
pub trait PrefixSet {
    fn raw(&self) -> &BTreeSet<Bits>;

    /// Some element equals or extends `p`.
    fn has_extension(&self, p: &Bits) -> bool {
        self.raw().range(p.clone()..).next().is_some_and(|q| p.is_prefix_of(q))
    }

    /// Some element strictly extends `p`.
    fn has_strict_extension(&self, p: &Bits) -> bool {
        self.raw()
            .range(p.clone()..)
            .find(|q| *q != p)
            .is_some_and(|q| p.is_prefix_of(q))
    }
}

impl PrefixSet for BTreeSet<Bits> {
    fn raw(&self) -> &BTreeSet<Bits> {
        self
    }
}

/// A finite union of cylinders in canonical form: prefix-free with no two
/// siblings present.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Clopen(BTreeSet<Bits>);

impl PrefixSet for Clopen {
    fn raw(&self) -> &BTreeSet<Bits> {
        &self.0
    }
}

impl std::fmt::Debug for Clopen {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

/// Canonical form of the union of `[σ]` over the given strings.
pub fn canonicalize<I: IntoIterator<Item = Bits>>(strings: I) -> Clopen {
    let sorted: BTreeSet<Bits> = strings.into_iter().collect();
    let mut stack: Vec<Bits> = Vec::with_capacity(sorted.len());
    let mut last_kept: Option<Bits> = None;
    for x in sorted {
        if let Some(k) = &last_kept {
            if k.is_prefix_of(&x) {
                continue;
            }
        }
        last_kept = Some(x.clone());
        stack.push(x);
        // In a sorted antichain, siblings σ0, σ1 are adjacent.
        while stack.len() >= 2 {
            let n = stack.len();
            let (a, b) = (&stack[n - 2], &stack[n - 1]);
            let siblings = a.len() == b.len()
                && !a.is_empty()
                && a.last() == Some(false)
                && b.last() == Some(true)
                && a.parent() == b.parent();
            if !siblings {
                break;
            }
            let p = b.parent().unwrap();
            stack.truncate(n - 2);
            stack.push(p);
        }
    }
    Clopen(stack.into_iter().collect())
}

impl Clopen {
    pub fn empty() -> Self {
        Clopen(BTreeSet::new())
    }

    pub fn full() -> Self {
        Clopen([Bits::empty()].into_iter().collect())
    }

    pub fn cylinder(s: Bits) -> Self {
        Clopen([s].into_iter().collect())
    }

    pub fn from_strs(xs: &[&str]) -> Result<Self> {
        Ok(canonicalize(xs.iter().map(|s| Bits::parse(s)).collect::<Result<Vec<_>>>()?))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Bits> {
        self.0.iter()
    }

    pub fn contains_string(&self, s: &Bits) -> bool {
        self.0.contains(s)
    }

    /// Longest resident string, 0 when empty.
    pub fn depth(&self) -> usize {
        self.0.iter().map(Bits::len).max().unwrap_or(0)
    }

    /// `[σ] ⊆ self`. For a canonical set this holds iff a prefix of `σ` is resident.
    pub fn covers(&self, s: &Bits) -> bool {
        self.0.range(..=s.clone()).next_back().is_some_and(|p| p.is_prefix_of(s))
    }

    /// `[σ] ∩ self ≠ ∅`.
    pub fn meets(&self, s: &Bits) -> bool {
        self.covers(s) || self.has_extension(s)
    }

    /// Membership of the infinite sequence whose bits are given by `bit`.
    pub fn contains_point(&self, bit: impl Fn(usize) -> bool) -> bool {
        let d = self.depth();
        let mut p = Bits::empty();
        for n in 0..=d {
            if self.0.contains(&p) {
                return true;
            }
            if n < d {
                p.push(bit(n));
            }
        }
        false
    }

    pub fn measure(&self) -> Dyadic {
        let d = self.depth() as u64;
        let mut num = BigUint::default();
        for s in &self.0 {
            num += BigUint::one() << (d - s.len() as u64) as usize;
        }
        Dyadic::new(num, d)
    }

    pub fn union(&self, other: &Clopen) -> Clopen {
        canonicalize(self.0.iter().chain(other.0.iter()).cloned())
    }

    pub fn intersect(&self, other: &Clopen) -> Clopen {
        let a = self.0.iter().filter(|x| other.covers(x));
        let b = other.0.iter().filter(|x| self.covers(x));
        canonicalize(a.chain(b).cloned())
    }

    /// `[self] ⊆ [other]`.
    pub fn subset(&self, other: &Clopen) -> bool {
        self.0.iter().all(|x| other.covers(x))
    }

    pub fn is_disjoint(&self, other: &Clopen) -> bool {
        self.0.iter().all(|x| !other.meets(x))
    }

    /// Set difference `self \ other`.
    pub fn difference(&self, other: &Clopen) -> Clopen {
        let mut out = Vec::new();
        for x in &self.0 {
            other.subtract_below(x, &mut out);
        }
        canonicalize(out)
    }

    fn subtract_below(&self, p: &Bits, out: &mut Vec<Bits>) {
        if self.covers(p) {
            return;
        }
        if !self.has_extension(p) {
            out.push(p.clone());
            return;
        }
        self.subtract_below(&p.pushed(false), out);
        self.subtract_below(&p.pushed(true), out);
    }

    /// Complement inside Cantor space; every resident string must have length ≤ `k`.
    pub fn complement(&self, k: usize) -> Result<Clopen> {
        let d = self.depth();
        if d > k {
            return Err(Error::DepthExceeded { len: d, bound: k });
        }
        Ok(Clopen::full().difference(self))
    }

    /// Image under `σ ↦ prefix⌢σ`.
    pub fn translate(&self, prefix: &Bits) -> Clopen {
        canonicalize(self.0.iter().map(|s| prefix.concat(s)))
    }

    /// The str_order-least `τ` with `[σ⌢τ] ⊆ self`.
    pub fn shortest_extension_inside(&self, s: &Bits) -> Option<Bits> {
        if self.covers(s) {
            return Some(Bits::empty());
        }
        self.0
            .range(s.clone()..)
            .take_while(|q| s.is_prefix_of(q))
            .min_by(|a, b| crate::bits::str_order(a, b))
            .map(|q| q.suffix_from(s.len()))
    }
}

impl Serialize for Clopen {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Clopen {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<Bits>::deserialize(d)?;
        Ok(canonicalize(v))
    }
}

/// Leftmost string of length exactly `len` such that `[σ]` misses `blocked`
/// and `pred(σ)` holds. `pred` must give the same answer on every string of
/// length `len` below a node that no element of `aux` strictly extends; the
/// search collapses such subtrees to their leftmost representative.
pub fn first_of_length<F>(len: usize, blocked: &Clopen, aux: &[&dyn PrefixSet], pred: &F) -> Option<Bits>
where
    F: Fn(&Bits) -> bool,
{
    fn go<F: Fn(&Bits) -> bool>(
        p: Bits,
        len: usize,
        blocked: &Clopen,
        aux: &[&dyn PrefixSet],
        pred: &F,
    ) -> Option<Bits> {
        if blocked.covers(&p) {
            return None;
        }
        let blocked_below = blocked.has_extension(&p);
        if p.len() == len {
            return (!blocked_below && pred(&p)).then_some(p);
        }
        if !blocked_below && aux.iter().all(|a| !a.has_strict_extension(&p)) {
            let rep = p.concat(&Bits::repeat(false, len - p.len()));
            return pred(&rep).then_some(rep);
        }
        go(p.pushed(false), len, blocked, aux, pred).or_else(|| go(p.pushed(true), len, blocked, aux, pred))
    }
    go(Bits::empty(), len, blocked, aux, pred)
}

/// First string in str_order with length in `min_len..=max_len` satisfying the
/// conditions of [`first_of_length`].
pub fn first_in_str_order<F>(
    min_len: usize,
    max_len: usize,
    blocked: &Clopen,
    aux: &[&dyn PrefixSet],
    pred: &F,
) -> Option<Bits>
where
    F: Fn(&Bits) -> bool,
{
    (min_len..=max_len).find_map(|n| first_of_length(n, blocked, aux, pred))
}
