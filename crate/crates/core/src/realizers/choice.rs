//! Closed choice on the naturals against the layer problem.
//!
//! A closed-choice instance `f` enumerates `{n : n+1 ∈ ran f}`; a solution is
//! any number never enumerated.

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::json;

use super::{describe, output_rd, upto, Realized, Reduction, StreamRun};
use crate::deficiency::{rd_final, Point};
use crate::enumeration::Test;
use crate::error::{Error, Result};
use crate::scenario::Stream;
use crate::trace::Event;

/// The `i`-th prime, from 0.
pub fn nth_prime(i: usize) -> u64 {
    let mut found = 0;
    let mut n = 1u64;
    loop {
        n += 1;
        if (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d)) {
            if found == i {
                return n;
            }
            found += 1;
        }
    }
}

/// Index of the least prime dividing `n`; `None` for 0 and 1.
pub fn least_prime_index(n: u64) -> Option<usize> {
    if n < 2 {
        return None;
    }
    let p = (2..).take_while(|d| d * d <= n).find(|d| n.is_multiple_of(*d)).unwrap_or(n);
    (0..).find(|&i| nth_prime(i) == p)
}

#[derive(Clone, Debug, Serialize)]
pub struct CnRun {
    pub stream: String,
    /// Enumerated numbers in order; the instance is `k ↦ enumerated[k] + 1`.
    pub enumerated: Vec<u64>,
    /// `(stage, searched index, target)` at each change of target.
    pub targets: Vec<(usize, usize, u64)>,
    pub survivors: Vec<u64>,
    #[serde(skip)]
    pub events: Vec<Event>,
}

/// Enumerate one number per stage, never the target `p_i^n`. When
/// `X ∈ U_{i,s}` move to `i+1` and the least `n ≥ 1` with `p_{i+1}^n` above
/// everything enumerated so far.
pub fn cn_run(u: &Test, x: &Stream) -> Result<CnRun> {
    let mut enumerated: BTreeSet<u64> = BTreeSet::new();
    let mut order = Vec::new();
    let mut events = Vec::new();
    let mut i = 0usize;
    let mut target = 2u64;
    let mut targets = vec![(0, 0, target)];
    // Numbers below `next` not yet enumerated.
    let mut gaps: BTreeSet<u64> = BTreeSet::new();
    let mut next = 0u64;
    for s in 0..=u.max_stage() {
        let mut moved = false;
        while i <= u.top() && x.in_clopen(u.view(i, s)) {
            i += 1;
            moved = true;
        }
        if moved {
            let p = nth_prime(i);
            let above = enumerated.iter().next_back().copied().unwrap_or(0);
            let mut t = p;
            while t <= above {
                t = t.checked_mul(p).ok_or_else(|| Error::OutOfBudget(format!("power of {p} overflows")))?;
            }
            target = t;
            targets.push((s, i, target));
            events.push(Event { stage: s, action: "target".into(), payload: json!({"stream": x.name, "i": i, "target": target}) });
        }
        // Least number not yet enumerated and not the target.
        let c = match gaps.iter().find(|&&g| g != target) {
            Some(&g) => {
                gaps.remove(&g);
                g
            }
            None => {
                if next == target {
                    gaps.insert(next);
                    next += 1;
                }
                next += 1;
                next - 1
            }
        };
        enumerated.insert(c);
        order.push(c);
    }
    let bound = target.max(enumerated.iter().next_back().copied().unwrap_or(0));
    let survivors = (0..=bound).filter(|n| !enumerated.contains(n)).collect();
    Ok(CnRun { stream: x.name.clone(), enumerated: order, targets, survivors, events })
}

/// The unique survivor must decode to the final deficiency of `X`.
pub fn lay_to_cn(u: &Test, xs: &[Stream]) -> Result<Realized> {
    let mut out = Realized::default();
    for x in xs {
        let run = cn_run(u, x)?;
        out.trace.absorb(run.events.iter().cloned());
        let truth = rd_final(Point::Stream(x), u);
        let answer = run.survivors.first().copied();
        let decoded = answer.and_then(least_prime_index);
        let verdict = run.survivors.len() == 1 && truth <= u.top() && decoded == Some(truth);
        out.record(
            format!("{} enumerations, last target {}", run.enumerated.len(), run.targets.last().map_or(0, |t| t.2)),
            json!(answer),
            json!(decoded),
            verdict,
            json!({"stream": x.name, "survivors": run.survivors, "rd": truth, "targets": run.targets}),
        );
    }
    Ok(out)
}

/// `a_s(f)`: least `n` with `f(k) ≠ n+1` for all `k ≤ s`, `f` zero beyond its prefix.
pub fn a_s(f: &[u64], s: usize) -> u64 {
    let seen: BTreeSet<u64> = f.iter().take(s + 1).copied().collect();
    (0..).find(|n| !seen.contains(&(n + 1))).expect("finite prefix")
}

/// When to pad in the choice-times-identity transducer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FireRule {
    /// Pad at stages where `a_s(f) ≠ a_{s+1}(f)`.
    OnChange,
    /// Pad at stages where `a_s(f) = a_{s+1}(f)`. Any instance with a solution
    /// then pads forever, so the output is not random.
    OnEqual,
}

/// `(f, X) ↦ pad⌢X`, padding so `rd > s` at every firing stage `s`;
/// `Ψ((f, X), s) = (a_s(f), X)`.
#[derive(Clone, Debug)]
pub struct CnTimesMlr {
    pub u: Test,
    pub rule: FireRule,
}

impl Reduction for CnTimesMlr {
    type In = (Vec<u64>, Stream);
    type Out = (u64, String);

    fn phi(&self, (f, x): &(Vec<u64>, Stream)) -> Result<StreamRun> {
        let mut run = StreamRun::new(x);
        // Past the prefix `a_s` is constant; past `top` every pad target is
        // the same, so later firings add nothing.
        let last = match self.rule {
            FireRule::OnChange => f.len(),
            FireRule::OnEqual => (f.len() + self.u.top() + 1).min(self.u.max_stage()),
        };
        for s in 0..last {
            let (a, b) = (a_s(f, s), a_s(f, s + 1));
            let fire = match self.rule {
                FireRule::OnChange => a != b,
                FireRule::OnEqual => a == b,
            };
            if fire {
                run.commit(&self.u, upto(s, &self.u), s, "choice-stage")?;
            }
        }
        if self.rule == FireRule::OnEqual && last < self.u.max_stage() {
            run.note(last, "saturated", json!({"from": last}));
        }
        Ok(run)
    }

    fn psi(&self, (f, x): &(Vec<u64>, Stream), advice: usize) -> Option<(u64, String)> {
        Some((a_s(f, advice), x.name.clone()))
    }
}

pub fn cn_times_mlr_to_lay(u: &Test, rule: FireRule, instances: &[(Vec<u64>, Stream)], depth: usize) -> Result<Realized> {
    let red = CnTimesMlr { u: u.clone(), rule };
    let mut out = Realized::default();
    for inst in instances {
        let run = red.phi(inst)?;
        let ok = out.structure(&run, u, depth);
        let rd = output_rd(&run, u);
        let want = a_s(&inst.0, inst.0.len());
        let wrong = rd.map(|r| {
            [r, r.max(inst.0.len()), u.max_stage().max(r)]
                .into_iter()
                .filter(|&s| red.psi(inst, s) != Some((want, inst.1.name.clone())))
                .collect::<Vec<_>>()
        });
        let verdict = ok && wrong.as_ref().is_some_and(Vec::is_empty);
        out.record(
            describe(&run),
            json!(rd),
            json!(rd.and_then(|r| red.psi(inst, r))),
            verdict,
            json!({"f": inst.0, "stream": inst.1.name, "least_solution": want, "rule": rule, "wrong_advice": wrong}),
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
        let comps = (0..=8)
            .map(|i| Enum::new(vec![(0, Bits::repeat(false, i + 2)), (3, Bits::repeat(true, i + 2))], 40).unwrap())
            .collect();
        Test::new(comps, true).unwrap()
    }

    #[test]
    fn primes() {
        assert_eq!((0..6).map(nth_prime).collect::<Vec<_>>(), vec![2, 3, 5, 7, 11, 13]);
        assert_eq!(least_prime_index(27), Some(1));
        assert_eq!(least_prime_index(1), None);
        assert_eq!(least_prime_index(12), Some(0));
        assert_eq!(least_prime_index(125), Some(2));
    }

    #[test]
    fn least_unenumerated() {
        assert_eq!(a_s(&[], 3), 0);
        assert_eq!(a_s(&[1, 2, 3, 4, 5], 4), 5);
        assert_eq!(a_s(&[1, 2, 3, 4, 5], 1), 2);
    }

    #[test]
    fn choice_survivor_decodes_deficiency() {
        let u = reservoir();
        let x = Stream::new("x", bits("1110"), bits("01")).unwrap();
        let r = lay_to_cn(&u, &[x]).unwrap();
        assert!(r.trace.all_pass(), "{:?}", r.trace.failures().collect::<Vec<_>>());
        assert_eq!(r.runs[0].post_output, json!(2));
    }

    #[test]
    fn on_change_rule_solves_choice() {
        let u = reservoir();
        let x = Stream::new("x", bits("10"), bits("01")).unwrap();
        let r = cn_times_mlr_to_lay(&u, FireRule::OnChange, &[(vec![1, 2, 3, 4, 5], x.clone()), (vec![], x)], 16).unwrap();
        assert!(r.trace.all_pass(), "{:?}", r.trace.failures().collect::<Vec<_>>());
    }

    #[test]
    fn on_equal_rule_fires_everywhere_on_empty_range() {
        let u = reservoir();
        let x = Stream::new("x", bits("10"), bits("01")).unwrap();
        let red = CnTimesMlr { u: u.clone(), rule: FireRule::OnEqual };
        let run = red.phi(&(vec![], x)).unwrap();
        let fired: Vec<usize> = run.commits.iter().map(|c| c.stage).collect();
        assert_eq!(fired, (0..fired.len()).collect::<Vec<_>>());
        assert!(output_rd(&run, &u).is_none());
    }
}
