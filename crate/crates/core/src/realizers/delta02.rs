//! Deciding a set given as two unions of pruned trees from layer advice.

use serde_json::json;

use super::{describe, output_rd, upto, Realized, Reduction, StreamRun};
use crate::clopen::{canonicalize, Clopen};
use crate::enumeration::Test;
use crate::error::{Error, Result};
use crate::scenario::{Stream, TreePair};

/// `p` has left tree `k` of the family, the last tree repeating.
fn left(v: &[Clopen], k: usize, p: &crate::Bits) -> bool {
    v.get(k).or(v.last()).is_none_or(|d| d.covers(p))
}

/// `A = ∪_k [T_k]` and its complement `∪_k [S_k]`, each tree given by its
/// dead region; a finite list stands for the sequence repeating its last
/// tree. `u` must be nested.
#[derive(Clone, Debug)]
pub struct Delta02 {
    pub u: Test,
    pub t: Vec<Clopen>,
    pub s: Vec<Clopen>,
    pub depth: usize,
}

impl Delta02 {
    pub fn new(u: &Test, pair: &TreePair, depth: usize) -> Self {
        let dead = |v: &Vec<Vec<crate::Bits>>| v.iter().map(|d| canonicalize(d.iter().cloned())).collect();
        Delta02 { u: u.clone(), t: dead(&pair.t), s: dead(&pair.s), depth }
    }

    fn on_t(&self, x: &Stream) -> bool {
        self.t.iter().any(|d| !x.in_clopen(d))
    }

    fn on_s(&self, x: &Stream) -> bool {
        self.s.iter().any(|d| !x.in_clopen(d))
    }

    /// `X ∈ A`, checking that `X` lies on exactly one side.
    pub fn member(&self, x: &Stream) -> Result<bool> {
        match (self.on_t(x), self.on_s(x)) {
            (a, b) if a != b => Ok(a),
            (a, _) => Err(Error::Validation(format!(
                "stream {} is on {} side of the tree pair",
                x.name,
                if a { "both" } else { "neither" }
            ))),
        }
    }
}

impl Reduction for Delta02 {
    type In = Stream;
    type Out = u64;

    /// Start inside `U_0`; at length `n`, while `X↾n` has left both `T_k` and
    /// `S_k`, pad into `U_{k+1}` and move to `k+1`.
    fn phi(&self, x: &Stream) -> Result<StreamRun> {
        let mut run = StreamRun::new(x);
        run.commit(&self.u, vec![0], 0, "initial")?;
        // Past either list its last tree repeats; leaving both last trees
        // would put X on neither side.
        let len = self.t.len().max(self.s.len());
        let mut k = 0;
        for n in 0..=self.depth {
            let p = x.prefix(n);
            while k < len && left(&self.t, k, &p) && left(&self.s, k, &p) {
                if k + 1 > self.u.top() {
                    run.note(n, "truncated", json!({"k": k, "top": self.u.top()}));
                }
                run.commit(&self.u, upto(k + 1, &self.u), n, "left-both")?;
                k += 1;
            }
        }
        Ok(run)
    }

    /// Least `n` such that `X↾n` has left every `T_j`, or every `S_j`, for
    /// `j ≤ i`; 0 in the first case, 1 in the second.
    fn psi(&self, x: &Stream, i: usize) -> Option<u64> {
        let jt = self.t.len().min(i + 1);
        let js = self.s.len().min(i + 1);
        (0..=self.depth).find_map(|n| {
            let p = x.prefix(n);
            if self.t[..jt].iter().all(|d| d.covers(&p)) {
                Some(0)
            } else if self.s[..js].iter().all(|d| d.covers(&p)) {
                Some(1)
            } else {
                None
            }
        })
    }
}

/// `Ψ` must give `χ_A(X)` at every advice `i ≥ rd(Φ(X))`.
pub fn delta02_to_lay(red: &Delta02, xs: &[Stream]) -> Result<Realized> {
    let mut out = Realized::default();
    for x in xs {
        let member = red.member(x)?;
        let run = red.phi(x)?;
        let ok = out.structure(&run, &red.u, red.depth);
        let rd = output_rd(&run, &red.u);
        let want = u64::from(member);
        let wrong = rd.map(|r| (r..=red.u.top().max(r)).filter(|&i| red.psi(x, i) != Some(want)).collect::<Vec<_>>());
        let verdict = ok && wrong.as_ref().is_some_and(Vec::is_empty);
        out.record(
            describe(&run),
            json!(rd),
            json!(rd.and_then(|r| red.psi(x, r))),
            verdict,
            json!({"stream": x.name, "member": member, "wrong_advice": wrong}),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::{bits, Bits};
    use crate::enumeration::Enum;

    fn reservoir() -> Test {
        let comps = (0..=8).map(|i| Enum::new(vec![(0, Bits::repeat(false, i + 2))], 4).unwrap()).collect();
        Test::new(comps, true).unwrap()
    }

    /// `A = [1]`: `T_0` has dead region `[0]`, `S_0` dead region `[1]`.
    fn open_pair() -> TreePair {
        TreePair { t: vec![vec![bits("0")]], s: vec![vec![bits("1")]] }
    }

    #[test]
    fn clopen_set_is_decided() {
        let red = Delta02::new(&reservoir(), &open_pair(), 16);
        let a = Stream::new("a", bits("11"), bits("01")).unwrap();
        let b = Stream::new("b", bits("01"), bits("1")).unwrap();
        let r = delta02_to_lay(&red, &[a.clone(), b]).unwrap();
        assert!(r.trace.all_pass(), "{:?}", r.trace.failures().collect::<Vec<_>>());
        // A path through T_0 never leaves it, so only the initial block is padded.
        assert_eq!(red.phi(&a).unwrap().commits.len(), 1);
    }

    #[test]
    fn neither_side_is_rejected() {
        let pair = TreePair { t: vec![vec![bits("0")]], s: vec![vec![bits("0"), bits("11")]] };
        let red = Delta02::new(&reservoir(), &pair, 16);
        let x = Stream::new("x", bits("0"), bits("1")).unwrap();
        assert!(matches!(red.member(&x), Err(Error::Validation(_))));
    }
}
