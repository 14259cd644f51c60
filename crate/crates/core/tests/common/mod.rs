//! Shared helpers for the integration tests: an exhaustive leaf-bitset model
//! of depth-8 clopens and scenario loading.

#![allow(dead_code)]

use std::path::PathBuf;

use cantor_lab::scenario::{Overrides, Scenario};
use cantor_lab::{canonicalize, Bits, Clopen, Dyadic};
use rand::Rng;

pub const DEPTH: usize = 8;

/// A clopen of depth at most 8 as the set of its 256 leaves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Leaves(pub [u64; 4]);

impl Leaves {
    pub fn of_strings(strings: &[Bits]) -> Self {
        let mut w = [0u64; 4];
        for s in strings {
            let pad = DEPTH - s.len();
            let base: usize = s.iter().fold(0, |a, b| (a << 1) | usize::from(b)) << pad;
            for leaf in base..base + (1 << pad) {
                w[leaf / 64] |= 1 << (leaf % 64);
            }
        }
        Leaves(w)
    }

    pub fn of(c: &Clopen) -> Self {
        Self::of_strings(&c.iter().cloned().collect::<Vec<_>>())
    }

    fn zip(self, o: Leaves, f: impl Fn(u64, u64) -> u64) -> Leaves {
        Leaves([0, 1, 2, 3].map(|i| f(self.0[i], o.0[i])))
    }

    pub fn union(self, o: Leaves) -> Leaves {
        self.zip(o, |a, b| a | b)
    }

    pub fn intersect(self, o: Leaves) -> Leaves {
        self.zip(o, |a, b| a & b)
    }

    pub fn difference(self, o: Leaves) -> Leaves {
        self.zip(o, |a, b| a & !b)
    }

    pub fn complement(self) -> Leaves {
        Leaves(self.0.map(|a| !a))
    }

    pub fn subset(self, o: Leaves) -> bool {
        self.difference(o) == Leaves([0; 4])
    }

    pub fn measure(self) -> Dyadic {
        let n: u32 = self.0.iter().map(|w| w.count_ones()).sum();
        Dyadic::from_u64(u64::from(n), DEPTH as u64)
    }
}

/// Random list of up to 5 strings of length at most 8.
pub fn random_strings<R: Rng>(rng: &mut R) -> Vec<Bits> {
    let n = rng.gen_range(0..=5);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(0..=DEPTH);
            Bits::from_bools((0..len).map(|_| rng.gen_bool(0.5)))
        })
        .collect()
}

/// Compare every clopen operation on the pair against the leaf model;
/// returns the name of the first disagreeing operation.
pub fn oracle_mismatch(a: &[Bits], b: &[Bits]) -> Option<&'static str> {
    let (ca, cb) = (canonicalize(a.iter().cloned()), canonicalize(b.iter().cloned()));
    let (la, lb) = (Leaves::of_strings(a), Leaves::of_strings(b));
    if Leaves::of(&ca) != la || Leaves::of(&cb) != lb {
        return Some("canonicalize");
    }
    if Leaves::of(&ca.union(&cb)) != la.union(lb) {
        return Some("union");
    }
    if Leaves::of(&ca.intersect(&cb)) != la.intersect(lb) {
        return Some("intersect");
    }
    if Leaves::of(&ca.difference(&cb)) != la.difference(lb) {
        return Some("difference");
    }
    if Leaves::of(&ca.complement(DEPTH).expect("depth within bound")) != la.complement() {
        return Some("complement");
    }
    if ca.subset(&cb) != la.subset(lb) {
        return Some("subset");
    }
    if ca.is_disjoint(&cb) != (la.intersect(lb) == Leaves([0; 4])) {
        return Some("disjoint");
    }
    if ca.measure() != la.measure() || cb.measure() != lb.measure() {
        return Some("measure");
    }
    None
}

pub fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

/// Every bundled scenario, sorted by file name.
pub fn bundled() -> Vec<(String, Scenario)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(scenario_dir())
        .expect("scenario directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, Scenario::from_path(&p, &Overrides::default()).expect("bundled scenario loads"))
        })
        .collect()
}
