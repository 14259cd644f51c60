//! Layerwise semi-decidable sets through two exact-deficiency queries.
//!
//! `A` is semi-decidable layerwise for `W`: there are uniformly open `U_n`
//! with `A ∩ W_n^c = U_n ∩ W_n^c`. The first query finds `n = rd_W(X)`; the
//! second asks for the deficiency of `X` padded once `X` is seen in `U_n`.

use serde_json::json;

use super::compose::{compose_star, ComposeStar};
use super::{upto, Realized, Reduction, StreamRun, RdFromLay};
use crate::enumeration::{Enum, Test};
use crate::error::{Error, Result};
use crate::scenario::{OpenFamily, Stream};

/// `X ↦ (X, rd_W(X))` through [`RdFromLay`] with `W` on both sides.
#[derive(Clone, Debug)]
pub struct RdSide {
    pub inner: RdFromLay,
}

impl Reduction for RdSide {
    type In = Stream;
    type Out = (Stream, usize);

    fn phi(&self, x: &Stream) -> Result<StreamRun> {
        self.inner.phi(x)
    }

    fn psi(&self, x: &Stream, advice: usize) -> Option<(Stream, usize)> {
        Some((x.clone(), self.inner.psi(x, advice)?))
    }
}

/// `(X, n) ↦ X`, padded into `∩_{i<s} W_{i,s}` at the first stage `s` with
/// `X ∈ U_{n,s}`; `Ψ((X, n), m) = [X ∈ U_{n,m}]`.
#[derive(Clone, Debug)]
pub struct MembershipSide {
    pub w: Test,
    /// `U_n` for `n ≤ top(W)+1`.
    pub family: Vec<Enum>,
}

impl MembershipSide {
    pub fn new(w: &Test, fam: &OpenFamily) -> Result<Self> {
        let big_s = w.max_stage();
        let to_sched = |v: &[crate::scenario::StagedCylinder]| v.iter().map(|c| (c.stage, c.cylinder.clone())).collect::<Vec<_>>();
        let shared = to_sched(&fam.set);
        let family = (0..=w.top() + 1)
            .map(|n| {
                let mut sched = shared.clone();
                if let Some(extra) = fam.layers.get(&n) {
                    sched.extend(to_sched(extra));
                }
                Enum::new(sched, big_s)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MembershipSide { w: w.clone(), family })
    }

    fn u(&self, n: usize) -> &Enum {
        &self.family[n.min(self.family.len() - 1)]
    }
}

impl Reduction for MembershipSide {
    type In = (Stream, usize);
    type Out = bool;

    fn phi(&self, (x, n): &(Stream, usize)) -> Result<StreamRun> {
        let mut run = StreamRun::new(x);
        let un = self.u(*n);
        let mut stages: Vec<usize> = un.change_stages().collect();
        stages.insert(0, 0);
        if let Some(s) = stages.into_iter().find(|&s| x.in_clopen(un.view(s))) {
            run.note(s, "entered", json!({"n": n}));
            if s > 0 {
                if s > self.w.len() {
                    run.note(s, "truncated", json!({"n": n, "top": self.w.top()}));
                }
                run.commit(&self.w, upto(s - 1, &self.w), s, "entered")?;
            }
        }
        Ok(run)
    }

    fn psi(&self, (x, n): &(Stream, usize), advice: usize) -> Option<bool> {
        Some(x.in_clopen(self.u(*n).view(advice)))
    }
}

/// Build both sides over a nested universal `w` and the family `U_n`.
pub fn semidecidable_sides(w: &Test, fam: &OpenFamily) -> Result<(RdSide, MembershipSide)> {
    let g = RdSide { inner: RdFromLay { v: w.clone(), u: w.clone() } };
    Ok((g, MembershipSide::new(w, fam)?))
}

/// Composite answer against `χ_A` with `A` the shared part of the family.
pub fn semidecidable_to_rd_star(w: &Test, fam: &OpenFamily, xs: &[Stream], depth: usize) -> Result<Realized> {
    let (g, f) = semidecidable_sides(w, fam)?;
    let a = Enum::new(fam.set.iter().map(|c| (c.stage, c.cylinder.clone())).collect(), w.max_stage())?;
    let a_final = a.final_view();
    for x in xs {
        let bad = (0..=w.top()).find(|&i| {
            !x.in_clopen(w.component(i).final_view()) && x.in_clopen(f.u(i).final_view()) != x.in_clopen(a_final)
        });
        if let Some(i) = bad {
            return Err(Error::Validation(format!(
                "stream {} breaks the layerwise condition at layer {i}",
                x.name
            )));
        }
    }
    let star = ComposeStar { g: &g, f: &f, u: w };
    compose_star(&star, xs, depth, |x| x.in_clopen(a_final))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::{bits, Bits};
    use crate::scenario::StagedCylinder;
    use std::collections::BTreeMap;

    fn chain() -> Test {
        let comps = (0..=8).map(|i| Enum::new(vec![(0, Bits::repeat(false, i + 2))], 6).unwrap()).collect();
        Test::new(comps, true).unwrap()
    }

    #[test]
    fn composite_decides_membership() {
        let w = chain();
        let mut layers = BTreeMap::new();
        // Junk inside W_1 is allowed in layer 1.
        layers.insert(1, vec![StagedCylinder { stage: 1, cylinder: bits("000") }]);
        let fam = OpenFamily { set: vec![StagedCylinder { stage: 2, cylinder: bits("11") }], layers };
        let xs = [
            Stream::new("in", bits("110"), bits("01")).unwrap(),
            Stream::new("out", bits("10"), bits("1")).unwrap(),
            Stream::new("low", bits("0001"), bits("10")).unwrap(),
        ];
        let r = semidecidable_to_rd_star(&w, &fam, &xs, 16).unwrap();
        assert!(r.trace.all_pass(), "{:?}", r.trace.failures().collect::<Vec<_>>());
        assert_eq!(r.runs[0].post_output, json!(true));
        assert_eq!(r.runs[1].post_output, json!(false));
    }
}
