//! An effectively open set `A` and a universal test `W` such that no tabled
//! functional decides `A` layerwise with respect to `W`.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::json;

use super::check_budgets;
use crate::bits::{pair, Bits};
use crate::clopen::{canonicalize, first_in_str_order, Clopen};
use crate::dyadic::Dyadic;
use crate::enumeration::{descending_chain, Enum, Test};
use crate::error::{Error, Result};
use crate::scenario::{Budgets, Functional, Stream};
use crate::trace::ConstructionTrace;

#[derive(Clone, Debug)]
pub struct Diagonal {
    pub w: Test,
    pub in_set: Clopen,
    pub out_set: Clopen,
    /// `(i, global stage, σ, vote)` for every triggered functional.
    pub picks: Vec<(usize, usize, Bits, u64)>,
    pub trace: ConstructionTrace,
}

/// Least `t` such that the strings of length `t` on which `Φ(·)(i)` converges
/// below 2 have total measure at least 1/2.
pub fn half_measure_length(phi: &Functional, i: usize) -> Option<usize> {
    let decided: Vec<Bits> =
        phi.prefixes(i).into_iter().filter(|p| phi.eval(p, i).is_some_and(|v| v < 2)).collect();
    let max_len = decided.iter().map(Bits::len).max()?;
    let half = Dyadic::pow2_neg(1);
    (0..=max_len).find(|&t| canonicalize(decided.iter().filter(|p| p.len() <= t).cloned()).measure() >= half)
}

/// Stage `s = ⟨i,t⟩` with `t` the half-measure length of `Φ_i`: pick the first
/// `σ` with `Φ_i(σ)(i) < 2`, `[σ]` disjoint from `W_{i,t} ∪ [IN] ∪ [OUT]`, `|σ| ≥ s+5`;
/// `e_i ← max(e_i, |σ|)+1`; vote 0 sends `σ` to IN, vote 1 to OUT. Every stage
/// sets `W_{i,t+1} = W_{i,t} ∪ Y_{e_i,t}` for `Y` the descending chain of `u`.
pub fn diagonal(u: &Test, functionals: &BTreeMap<usize, Functional>, b: &Budgets) -> Result<Diagonal> {
    let y = descending_chain(u)?;
    if y.top() < 4 {
        return Err(Error::OutOfBudget("diagonal needs components 0..=4".into()));
    }
    let rows = y.top() - 3;
    let big_s = y.max_stage();
    let k = b.max_depth;
    let mut trace = ConstructionTrace::new();
    let inert = Functional::default();
    let trigger: Vec<Option<usize>> =
        (0..rows).map(|i| half_measure_length(functionals.get(&i).unwrap_or(&inert), i)).collect();

    let mut e: Vec<usize> = (0..rows).map(|i| i + 4).collect();
    let mut w_cur: Vec<Clopen> = vec![Clopen::empty(); rows];
    let mut w_views: Vec<Vec<(usize, Clopen)>> = vec![Vec::new(); rows];
    let mut in_set: Vec<Bits> = Vec::new();
    let mut out_set: Vec<Bits> = Vec::new();
    let mut in_c = Clopen::empty();
    let mut out_c = Clopen::empty();
    let mut picks = Vec::new();
    let mut truncated_noted = BTreeSet::new();
    let mut in_out_ok = true;
    let sixteenth = Dyadic::pow2_neg(4);

    let mut order: Vec<(usize, usize)> = (0..rows).flat_map(|i| (0..big_s).map(move |t| (i, t))).collect();
    order.sort_by_key(|&(i, t)| pair(i as u64, t as u64));
    for (i, t) in order {
        let s = pair(i as u64, t as u64) as usize;
        if trigger[i] == Some(t) {
            let phi = &functionals[&i];
            let aux = phi.prefixes(i);
            let blocked = w_cur[i].union(&in_c).union(&out_c);
            let pred = |sg: &Bits| phi.eval(sg, i).is_some_and(|v| v < 2);
            let sigma = first_in_str_order(s + 5, k, &blocked, &[&aux], &pred).ok_or_else(|| {
                Error::SearchExhausted(format!(
                    "functional {i} triggered at stage {s}: no piece of length in {}..={k} is free",
                    s + 5
                ))
            })?;
            let vote = phi.eval(&sigma, i).expect("search keeps converging strings");
            e[i] = e[i].max(sigma.len()) + 1;
            let cyl = Clopen::cylinder(sigma.clone());
            if vote == 0 {
                in_set.push(sigma.clone());
                in_c = in_c.union(&cyl);
            } else {
                out_set.push(sigma.clone());
                out_c = out_c.union(&cyl);
            }
            in_out_ok &= in_c.is_disjoint(&out_c) && in_c.measure() <= sixteenth && out_c.measure() <= sixteenth;
            trace.event(
                s,
                "diagonal",
                json!({"i": i, "t": t, "sigma": sigma.to_string(), "vote": vote, "e": e[i]}),
            );
            picks.push((i, s, sigma, vote));
        }
        if e[i] > y.top() {
            if truncated_noted.insert(i) {
                trace.event(s, "truncated", json!({"i": i, "index": e[i], "top": y.top()}));
            }
        } else {
            let add = y.view(e[i], t);
            if !add.subset(&w_cur[i]) {
                w_cur[i] = w_cur[i].union(add);
                w_views[i].push((t + 1, w_cur[i].clone()));
            }
        }
    }

    let comps = w_views
        .into_iter()
        .map(|v| Enum::from_views(v, big_s))
        .collect::<Result<Vec<_>>>()?;
    let w = Test::new(comps, false)?;
    check_budgets(&mut trace, "w", &w);
    trace.check("in-out", in_out_ok, json!({"in": in_c.measure(), "out": out_c.measure()}));
    for i in 0..rows {
        let mut stages = w.change_stages_of(&[i]);
        stages.extend(y.component(i + 4).change_stages());
        let bad = stages.iter().copied().find(|&t| !w.view(i, t).subset(y.view(i + 4, t)));
        trace.check("w-inside-y", bad.is_none(), json!({"i": i, "initial_index": i + 4, "bad_stage": bad}));
    }
    let a = in_c.clone();
    for (i, s, sigma, vote) in &picks {
        let cyl = Clopen::cylinder(sigma.clone());
        let wi = w.component(*i).final_view();
        let placed = if *vote == 0 { cyl.subset(&a) } else { cyl.is_disjoint(&a) };
        let inside = cyl.intersect(wi).measure();
        let gap = inside < cyl.measure();
        trace.check(
            "diagonal",
            placed && gap && sigma.len() >= s + 5,
            json!({"i": i, "s": s, "sigma": sigma.to_string(), "vote": vote, "inside_w": inside}),
        );
        // A point of [σ] outside W_i on which Φ_i(·)(i) misjudges A.
        let escape = cyl.difference(wi);
        let witness = escape.iter().next().cloned();
        let disagrees = witness.as_ref().is_some_and(|p| {
            let x = Stream { name: "witness".into(), pad: p.clone(), period: Bits::repeat(false, 1), random: false };
            let said = functionals[i].eval_stream(&x, *i);
            let member = x.in_clopen(&a);
            said.is_some_and(|v| (v == 1) != member) && !x.in_clopen(wi)
        });
        trace.check(
            "diagonal-point",
            disagrees,
            json!({"i": i, "point_prefix": witness.map(|p| p.to_string())}),
        );
    }
    trace.output("w", w.to_json());
    trace.output("in", json!(canonicalize(in_set.iter().cloned())));
    trace.output("out", json!(canonicalize(out_set.iter().cloned())));
    Ok(Diagonal { w, in_set: in_c, out_set: out_c, picks, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::scenario::FunctionalEntry;

    #[test]
    fn half_measure_trigger() {
        let phi = Functional::new(vec![
            FunctionalEntry { prefix: bits("00"), advice: 0, value: 0 },
            FunctionalEntry { prefix: bits("01"), advice: 0, value: 5 },
            FunctionalEntry { prefix: bits("100"), advice: 0, value: 1 },
            FunctionalEntry { prefix: bits("101"), advice: 0, value: 1 },
        ]);
        assert_eq!(half_measure_length(&phi, 0), Some(3));
        assert_eq!(half_measure_length(&phi, 1), None);
    }

    #[test]
    fn diagonal_on_small_test() {
        let comps = (0..=8)
            .map(|i| Enum::new(vec![(0, Bits::repeat(true, i + 1))], 6).unwrap())
            .collect();
        let u = Test::new(comps, false).unwrap();
        let mut fs = BTreeMap::new();
        fs.insert(0, Functional::new(vec![FunctionalEntry { prefix: bits(""), advice: 0, value: 0 }]));
        fs.insert(1, Functional::new(vec![FunctionalEntry { prefix: bits("0"), advice: 1, value: 1 }, FunctionalEntry { prefix: bits("1"), advice: 1, value: 1 }]));
        let b = Budgets { max_index: 8, max_stage: 6, max_depth: 24, max_ell: None };
        let d = diagonal(&u, &fs, &b).unwrap();
        assert_eq!(d.picks.len(), 2);
        assert!(d.trace.all_pass(), "{:?}", d.trace.failures().collect::<Vec<_>>());
        assert!(d.in_set.is_disjoint(&d.out_set));
    }
}
