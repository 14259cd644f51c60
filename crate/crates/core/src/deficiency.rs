//! Stage-relative randomness deficiency, membership queries, pruned trees
//! and the layerwise evaluation harness.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::clopen::{canonicalize, Clopen};
use crate::dyadic::Dyadic;
use crate::enumeration::Test;
use crate::error::Result;
use crate::scenario::{Functional, Stream};

/// A query point: an infinite stream, or the cylinder of a finite string.
#[derive(Clone, Copy, Debug)]
pub enum Point<'a> {
    Stream(&'a Stream),
    Cylinder(&'a Bits),
}

impl Point<'_> {
    /// `X ∈ C` for a stream, `[σ] ⊆ C` for a string.
    pub fn inside(&self, c: &Clopen) -> bool {
        match self {
            Point::Stream(x) => x.in_clopen(c),
            Point::Cylinder(s) => c.covers(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeficiencyReport {
    pub value: usize,
    pub stage: usize,
    pub determined: bool,
}

/// `X ∈ U_{i,s}`.
pub fn member_at_stage(x: &Stream, t: &Test, i: usize, s: usize) -> Result<bool> {
    Ok(x.in_clopen(t.stage_view(i, s)?))
}

fn least_escape(p: Point<'_>, t: &Test, s: usize) -> usize {
    (0..t.len()).find(|&i| !p.inside(t.view(i, s))).unwrap_or(t.len())
}

/// Least `i ≤ top` with the point outside component `i` at stage `s`. A point
/// inside every component gets `top + 1`, never determined.
pub fn rd_at_stage(p: Point<'_>, t: &Test, s: usize) -> DeficiencyReport {
    let s = s.min(t.max_stage());
    let value = least_escape(p, t, s);
    let last = if s == t.max_stage() { value } else { least_escape(p, t, t.max_stage()) };
    DeficiencyReport { value, stage: s, determined: value == last && value <= t.top() }
}

/// Final-stage deficiency value.
pub fn rd_final(p: Point<'_>, t: &Test) -> usize {
    least_escape(p, t, t.max_stage())
}

/// A pruned tree given by its dead region: `σ ∈ T` iff `[σ] ⊄ dead`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Tree {
    pub dead: Clopen,
    pub depth: usize,
}

impl Tree {
    pub fn full(depth: usize) -> Self {
        Tree { dead: Clopen::empty(), depth }
    }

    /// Complement tree of a clopen: strings whose cylinder it does not cover.
    pub fn outside(c: &Clopen, depth: usize) -> Self {
        Tree { dead: c.clone(), depth }
    }

    pub fn contains(&self, s: &Bits) -> bool {
        s.len() <= self.depth && !self.dead.covers(s)
    }

    pub fn contains_path(&self, x: &Stream) -> bool {
        !x.in_clopen(&self.dead)
    }

    /// `λ([T]) = 1 - λ(dead)`.
    pub fn measure(&self) -> Dyadic {
        Dyadic::one().checked_sub(&self.dead.measure()).expect("dead set has measure ≤ 1")
    }
}

/// `S_i = {σ ∈ T : Φ(σ)(i)↓ → Φ(σ)(i) = i}`: kill the table prefixes that decide
/// advice `i` with a value other than `i`.
pub fn filter_tree(tree: &Tree, phi: &Functional, i: usize) -> Tree {
    let entries: BTreeSet<Bits> = phi.prefixes(i);
    let kill = entries.iter().filter(|p| {
        // Only the shortest matching entry decides the value.
        phi.eval(p, i).is_some_and(|v| v != i as u64) && p.len() <= tree.depth
    });
    Tree { dead: canonicalize(tree.dead.iter().cloned().chain(kill.cloned())), depth: tree.depth }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Consistent { value: u64 },
    Inconsistent { values: Vec<(usize, u64)> },
    Divergence { advice: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerwiseReport {
    pub admissible: Vec<usize>,
    pub verdict: Verdict,
    /// `Φ(X, rd(X))`, when the deficiency is determined and the table converges there.
    pub exact: Option<u64>,
    pub rd: DeficiencyReport,
}

/// Evaluate `phi` on `x` at every advice `i` with `x ∉ V_{i,S}`.
pub fn layerwise_eval(phi: &Functional, x: &Stream, t: &Test) -> LayerwiseReport {
    let s = t.max_stage();
    let admissible: Vec<usize> = (0..t.len()).filter(|&i| !x.in_clopen(t.view(i, s))).collect();
    let rd = rd_at_stage(Point::Stream(x), t, s);
    let exact = rd.determined.then(|| phi.eval_stream(x, rd.value)).flatten();
    let mut values = Vec::new();
    let mut verdict = None;
    for &i in &admissible {
        match phi.eval_stream(x, i) {
            Some(v) => values.push((i, v)),
            None => {
                verdict = Some(Verdict::Divergence { advice: i });
                break;
            }
        }
    }
    let verdict = verdict.unwrap_or_else(|| match values.first() {
        Some(&(_, v)) if values.iter().all(|&(_, w)| w == v) => Verdict::Consistent { value: v },
        None => Verdict::Inconsistent { values: Vec::new() },
        _ => Verdict::Inconsistent { values },
    });
    LayerwiseReport { admissible, verdict, exact, rd }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::enumeration::Enum;
    use crate::scenario::FunctionalEntry;

    fn test_of(views: &[&[&str]]) -> Test {
        let comps = views
            .iter()
            .map(|v| Enum::new(v.iter().map(|s| (0, bits(s))).collect(), 2).unwrap())
            .collect();
        Test::new(comps, false).unwrap()
    }

    fn stream(pad: &str, period: &str) -> Stream {
        Stream::new("x", bits(pad), bits(period)).unwrap()
    }

    #[test]
    fn rd_examples() {
        let x = stream("", "10");
        let empty = test_of(&[&[], &[]]);
        assert_eq!(rd_at_stage(Point::Stream(&x), &empty, 2).value, 0);
        let t = test_of(&[&["0"], &[]]);
        assert_eq!(rd_at_stage(Point::Stream(&x), &t, 2).value, 0);
        let cap = test_of(&[&["1"], &["10"]]);
        let r = rd_at_stage(Point::Stream(&x), &cap, 2);
        assert_eq!((r.value, r.determined), (2, false));
        assert_eq!(rd_at_stage(Point::Cylinder(&bits("1")), &cap, 2).value, 1);
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"value":2,"stage":2,"determined":false}"#);
    }

    #[test]
    fn membership_examples() {
        let t = test_of(&[&[], &["01"]]);
        let x = stream("010", "1");
        assert!(!member_at_stage(&x, &t, 0, 0).unwrap());
        assert!(member_at_stage(&x, &t, 1, 0).unwrap());
        assert!(member_at_stage(&x, &t, 2, 0).is_err());
    }

    #[test]
    fn filter_prunes_only_wrong_values() {
        let t = Tree::full(4);
        assert_eq!(filter_tree(&t, &Functional::default(), 1), t);
        let phi = Functional::new(vec![
            FunctionalEntry { prefix: bits("0"), advice: 1, value: 1 },
            FunctionalEntry { prefix: bits("10"), advice: 1, value: 2 },
            FunctionalEntry { prefix: bits("01"), advice: 1, value: 5 },
        ]);
        let s = filter_tree(&t, &phi, 1);
        assert_eq!(s.dead, Clopen::cylinder(bits("10")));
        assert!(s.contains(&bits("011")));
    }

    #[test]
    fn layerwise_verdicts() {
        let t = test_of(&[&[], &[], &[]]);
        let x = stream("", "0");
        let konst = Functional::new((0..3).map(|i| FunctionalEntry { prefix: bits(""), advice: i, value: 7 }).collect());
        assert_eq!(layerwise_eval(&konst, &x, &t).verdict, Verdict::Consistent { value: 7 });
        let echo =
            Functional::new((0..3).map(|i| FunctionalEntry { prefix: bits(""), advice: i, value: i as u64 }).collect());
        let r = layerwise_eval(&echo, &x, &t);
        assert!(matches!(r.verdict, Verdict::Inconsistent { .. }));
        assert_eq!(r.exact, Some(0));
        let partial = Functional::new(vec![FunctionalEntry { prefix: bits(""), advice: 0, value: 1 }]);
        assert_eq!(layerwise_eval(&partial, &x, &t).verdict, Verdict::Divergence { advice: 1 });
    }
}
