//! An open set covering every captured point that contains no component of
//! a companion test, and the universal test obtained by swapping it in as
//! component 0.

use std::collections::BTreeSet;

use serde_json::json;

use super::{check_budgets, strs};
use crate::bits::Bits;
use crate::clopen::{canonicalize, first_in_str_order, Clopen};
use crate::dyadic::Dyadic;
use crate::enumeration::{replace_component, Enum, Test};
use crate::error::{Error, Result};
use crate::scenario::Budgets;
use crate::trace::ConstructionTrace;

#[derive(Clone, Debug)]
pub struct SigmaChain {
    pub w0: Enum,
    pub v: Test,
    pub sigmas: Vec<Bits>,
    /// Stages `t` whose `U_{|σ_t|+1}` lies beyond the top index.
    pub truncated: BTreeSet<usize>,
    pub trace: ConstructionTrace,
}

/// `σ_s` is the str_order-first string of length `≥ s+2` with `[σ_s]` disjoint
/// from `U_{2,s} ∪ ⋃_{t<s}[σ_t]`; then
/// `W₀@s = (U_{2,s} \ ⋃_{t<s}[σ_t]) ∪ ⋃_{t≤s}([σ_t] ∩ U_{|σ_t|+1,s})` and `V_i = [σ_i]`.
/// The chain runs for `s ≤ min(S, K-2)`.
pub fn sigma_chain(u: &Test, b: &Budgets) -> Result<SigmaChain> {
    if u.top() < 2 {
        return Err(Error::OutOfBudget("sigma chain needs components 0..=2".into()));
    }
    let k = b.max_depth;
    let big_s = u.max_stage();
    let s_max = big_s.min(k.checked_sub(2).ok_or_else(|| Error::OutOfBudget("depth below 2".into()))?);
    let mut trace = ConstructionTrace::new();
    let mut sigmas: Vec<Bits> = Vec::with_capacity(s_max + 1);
    let mut truncated = BTreeSet::new();
    let mut used = Clopen::empty();
    for s in 0..=s_max {
        let blocked = u.view(2, s).union(&used);
        let sigma = first_in_str_order(s + 2, k, &blocked, &[], &|_: &Bits| true).ok_or_else(|| {
            Error::SearchExhausted(format!("no string of length in {}..={k} avoids U_2 and earlier picks at stage {s}", s + 2))
        })?;
        trace.event(s, "sigma", json!({"s": s, "sigma": sigma.to_string(), "length": sigma.len()}));
        let target = sigma.len() + 1;
        if target > u.top() {
            truncated.insert(s);
            trace.event(s, "truncated", json!({"s": s, "index": target, "top": u.top()}));
        }
        used = used.union(&Clopen::cylinder(sigma.clone()));
        sigmas.push(sigma);
    }

    let mut changes: BTreeSet<usize> = (0..=s_max).collect();
    changes.extend(u.component(2).change_stages());
    for (t, sg) in sigmas.iter().enumerate() {
        if !truncated.contains(&t) {
            changes.extend(u.component(sg.len() + 1).change_stages());
        }
    }
    let w0_at = |s: usize| -> Clopen {
        let removed = canonicalize(sigmas.iter().take(s.min(s_max + 1)).cloned());
        let mut w = u.view(2, s).difference(&removed);
        for (t, sg) in sigmas.iter().enumerate().take(s.min(s_max) + 1) {
            if !truncated.contains(&t) {
                w = w.union(&Clopen::cylinder(sg.clone()).intersect(u.view(sg.len() + 1, s)));
            }
        }
        w
    };
    let w0 = Enum::derive(big_s, &changes, |s| Ok(w0_at(s)))?;

    let vtop = b.max_index.min(s_max);
    let comps =
        (0..=vtop).map(|i| Enum::new(vec![(i, sigmas[i].clone())], big_s)).collect::<Result<Vec<_>>>()?;
    let v = Test::new(comps, false)?;

    let short: Vec<usize> = (0..sigmas.len()).filter(|&s| sigmas[s].len() < s + 2).collect();
    trace.check("sigma-length", short.is_empty(), json!({"count": sigmas.len(), "short": short}));
    for (i, sg) in sigmas.iter().enumerate().take(vtop + 1) {
        let lv = Dyadic::pow2_neg(sg.len() as u64);
        let ok = v.component(i).final_view().measure() == lv && lv <= Dyadic::pow2_neg(i as u64 + 2);
        trace.check("v-measure", ok, json!({"i": i, "measure": lv}));
    }
    let mut sweep: BTreeSet<usize> = [0, big_s].into_iter().collect();
    sweep.extend(w0.change_stages());
    let final_w0 = w0.final_view();
    for (i, sg) in sigmas.iter().enumerate().take(vtop + 1) {
        let contained_at = sweep.iter().copied().find(|&s| w0.view(s).covers(sg));
        trace.check(
            "non-containment",
            contained_at.is_none(),
            json!({"i": i, "sigma": sg.to_string(), "stages": big_s + 1, "contained_at": contained_at}),
        );
        let cyl = Clopen::cylinder(sg.clone());
        let inside = cyl.intersect(final_w0).measure();
        let cap = if truncated.contains(&i) { Dyadic::zero() } else { u.view(sg.len() + 1, big_s).measure() };
        let lv = cyl.measure();
        trace.check(
            "measure-gap",
            inside <= cap && cap < lv,
            json!({"i": i, "inside": inside, "bound": cap, "measure": lv}),
        );
    }
    let captured = u.intersection_upto(u.top(), big_s);
    let cut = canonicalize(truncated.iter().map(|&t| sigmas[t].clone()));
    let uncovered = captured.difference(&cut).difference(final_w0);
    trace.check("captured-points", uncovered.is_empty(), json!({"uncovered": uncovered}));

    trace.output("sigmas", strs(&sigmas));
    trace.output("w0", w0.to_json());
    trace.output("v", v.to_json());
    Ok(SigmaChain { w0, v, sigmas, truncated, trace })
}

#[derive(Clone, Debug)]
pub struct NonOptimal {
    pub u: Test,
    pub chain: SigmaChain,
    pub trace: ConstructionTrace,
}

/// `u` with component 0 replaced by the sigma chain's `W₀`; component 0 then
/// contains no component of the chain's `V`.
pub fn non_optimal_universal(u: &Test, b: &Budgets) -> Result<NonOptimal> {
    let chain = sigma_chain(u, b)?;
    let mut trace = chain.trace.clone();
    let swapped = replace_component(u, 0, chain.w0.clone())?;
    let s = u.max_stage();
    trace.event(s, "replace", json!({"component": 0}));
    check_budgets(&mut trace, "u", &swapped);
    let bad: Vec<usize> = (0..chain.v.len()).filter(|&j| chain.v.component(j).final_view().subset(swapped.view(0, s))).collect();
    trace.check("component-zero-witness", bad.is_empty(), json!({"v_components": chain.v.len(), "contained": bad}));
    trace.output("u", swapped.to_json());
    Ok(NonOptimal { u: swapped, chain, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;

    fn small_u() -> Test {
        let e = |items: &[(usize, &str)]| Enum::new(items.iter().map(|(s, c)| (*s, bits(c))).collect(), 6).unwrap();
        Test::new(
            vec![
                e(&[(0, "0")]),
                e(&[(0, "00")]),
                e(&[(0, "000"), (2, "0010")]),
                e(&[(1, "0000")]),
                e(&[(1, "00000"), (3, "10000")]),
                e(&[(1, "000000")]),
                e(&[(1, "0000000")]),
            ],
            false,
        )
        .unwrap()
    }

    #[test]
    fn chain_obligations_hold() {
        let b = Budgets { max_index: 6, max_stage: 6, max_depth: 10, max_ell: None };
        let c = sigma_chain(&small_u(), &b).unwrap();
        assert_eq!(c.sigmas[0], bits("01"));
        assert!(c.trace.all_pass(), "{:?}", c.trace.failures().collect::<Vec<_>>());
        for (s, sg) in c.sigmas.iter().enumerate() {
            assert!(sg.len() >= s + 2);
        }
        let n = non_optimal_universal(&small_u(), &b).unwrap();
        assert!(n.trace.all_pass());
    }
}
